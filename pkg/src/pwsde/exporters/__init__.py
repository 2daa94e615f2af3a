from .base_exporter import BaseExporter
from .csv_exporter import (
    ConvergenceCSVExporter,
    CSVExporter,
    DecompositionCSVExporter,
    ExcursionCSVExporter,
    OccupationCSVExporter,
    PathCSVExporter,
    TransformGridCSVExporter,
)
from .sidecar_exporter import TransformSidecarExporter

__all__ = [
    'BaseExporter',
    'CSVExporter',
    'ConvergenceCSVExporter',
    'DecompositionCSVExporter',
    'ExcursionCSVExporter',
    'OccupationCSVExporter',
    'PathCSVExporter',
    'TransformGridCSVExporter',
    'TransformSidecarExporter',
]
