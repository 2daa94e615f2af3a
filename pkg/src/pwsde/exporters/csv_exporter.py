import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from ..utils import format_number
from .base_exporter import BaseExporter

logger = logging.getLogger(__name__)


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_number(value)
    return str(value)


class CSVExporter(BaseExporter):
    """Writes tabular results to CSV.

    Subclasses name the key their rows live under and turn the data into a
    header, rows and optional trailing ``#`` comment lines.
    """

    key = "rows"
    label = "rows"

    def header(self, data: Dict[str, Any]) -> List[str]:
        raise NotImplementedError

    def rows(self, data: Dict[str, Any]) -> Iterable[Sequence[Any]]:
        raise NotImplementedError

    def footer(self, data: Dict[str, Any]) -> List[str]:
        return []

    def export(self, data: Dict[str, Any], file_path: str) -> None:
        """Export data to a CSV file.

        Args:
            data: Dictionary holding the rows under ``self.key``.
            file_path: Path where the CSV file should be written.

        Raises:
            ValueError: If data structure is invalid.
            IOError: If file write fails.
        """
        if not data or self.key not in data:
            raise ValueError(f"Data must contain '{self.key}' key")

        rows = [[_cell(v) for v in row] for row in self.rows(data)]
        if not rows:
            logger.warning(f"No {self.label} to export")

        try:
            Path(file_path).parent.mkdir(parents=True, exist_ok=True)

            with open(file_path, mode='w', newline='', encoding='utf-8') as file:
                writer = csv.writer(file, lineterminator='\n')
                writer.writerow(self.header(data))
                writer.writerows(rows)
                for line in self.footer(data):
                    file.write(f"# {line}\n")

            logger.info(f"Successfully exported {len(rows)} {self.label} to CSV: {file_path}")
        except IOError as e:
            logger.error(f"Failed to write CSV file {file_path}: {e}")
            raise


class ConvergenceCSVExporter(CSVExporter):
    """``delta,error,n_paths,ci_half_width`` plus the fitted order as a comment."""

    label = "convergence rows"

    def header(self, data):
        return ["delta", "error", "n_paths", "ci_half_width"]

    def rows(self, data):
        for row in data["rows"]:
            yield row["delta"], row["error"], row["n_paths"], row["ci_half_width"]

    def footer(self, data):
        order, intercept = data.get("fitted_order"), data.get("intercept")
        if order is None:
            return ["fitted_order=nan intercept=nan"]
        return [f"fitted_order={format_number(order)} intercept={format_number(intercept)}"]


class OccupationCSVExporter(CSVExporter):
    label = "occupation rows"

    def header(self, data):
        return ["eps", "delta", "occupation", "n_paths"]

    def rows(self, data):
        for row in data["rows"]:
            yield row["eps"], row["delta"], row["occupation"], row["n_paths"]


class ExcursionCSVExporter(CSVExporter):
    label = "excursion rows"

    def header(self, data):
        return ["eps", "delta", "probability", "n_paths"]

    def rows(self, data):
        for row in data["rows"]:
            yield row["eps"], row["delta"], row["probability"], row["n_paths"]


class DecompositionCSVExporter(CSVExporter):
    label = "decomposition rows"

    def header(self, data):
        return ["delta", "transformed_error", "mismatch", "n_paths"]

    def rows(self, data):
        for row in data["rows"]:
            yield row["delta"], row["transformed_error"], row["mismatch"], row["n_paths"]


def _coordinates(prefix: str, dim: int) -> List[str]:
    return [prefix] if dim == 1 else [f"{prefix}{i}" for i in range(1, dim + 1)]


class PathCSVExporter(CSVExporter):
    """One simulated path: ``t``, the coordinates and the band flag.

    Expects ``times`` ``(K,)``, ``path`` ``(K, d)`` and optionally
    ``in_band`` ``(K,)``; without flags every row is marked 0.
    """

    key = "path"
    label = "path points"

    def header(self, data):
        return ["t"] + _coordinates("x", np.asarray(data["path"]).shape[1]) + ["in_band"]

    def rows(self, data):
        path = np.asarray(data["path"])
        in_band = data.get("in_band")
        flags = np.zeros(path.shape[0], dtype=bool) if in_band is None else np.asarray(in_band)
        for t, x, flag in zip(data["times"], path, flags):
            yield [t, *x, flag]


class TransformGridCSVExporter(CSVExporter):
    """Transform on a grid: ``x``, ``G(x)`` and ``det DG(x)``."""

    key = "x"
    label = "grid points"

    def header(self, data):
        dim = np.asarray(data["x"]).shape[1]
        return _coordinates("x", dim) + _coordinates("g", dim) + ["det_jacobian"]

    def rows(self, data):
        for x, g, det in zip(np.asarray(data["x"]), np.asarray(data["g"]), data["det_jacobian"]):
            yield [*x, *g, det]
