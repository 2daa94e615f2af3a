"""Piecewise SDE - simulate SDEs whose drift jumps across a hypersurface."""

__version__ = "1.0.0"
__author__ = "Amuro Ray"
__description__ = "Transformed Euler-Maruyama for SDEs with discontinuous drift"

from .brownian import BrownianGrid, increments_at, sample_brownian
from .errors import (
    ArgumentError,
    ConfigError,
    ConstructionError,
    DomainError,
    ModelError,
    NumericError,
    PwsdeError,
    SamplingError,
)
from .models.problem import SdeProblem
from .solvers import Scheme, SchemeOutput, euler_maruyama_path, solve_em, solve_gm
from .transform import Transform, build_transform

__all__ = [
    "BrownianGrid",
    "increments_at",
    "sample_brownian",
    "ArgumentError",
    "ConfigError",
    "ConstructionError",
    "DomainError",
    "ModelError",
    "NumericError",
    "PwsdeError",
    "SamplingError",
    "SdeProblem",
    "Scheme",
    "SchemeOutput",
    "euler_maruyama_path",
    "solve_em",
    "solve_gm",
    "Transform",
    "build_transform",
]
