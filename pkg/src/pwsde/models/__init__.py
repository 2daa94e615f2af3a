from .problem import SdeProblem
from .registry import get_problem, registry
from .reports import (
    ConvergenceReport,
    ConvergenceRow,
    DecompositionReport,
    DecompositionRow,
    ExcursionReport,
    ExcursionRow,
    OccupationReport,
    OccupationRow,
)

__all__ = [
    'SdeProblem',
    'get_problem',
    'registry',
    'ConvergenceReport',
    'ConvergenceRow',
    'DecompositionReport',
    'DecompositionRow',
    'ExcursionReport',
    'ExcursionRow',
    'OccupationReport',
    'OccupationRow',
]
