from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from ..errors import ArgumentError, DomainError
from ..utils import format_number
from .base import Hypersurface


@dataclass(frozen=True)
class PointSet1D(Hypersurface):
    """Finitely many discontinuity points ``xi_1 < ... < xi_m`` on the real line."""

    points: Tuple[float, ...]
    orientation: int = 1

    def __post_init__(self) -> None:
        pts = tuple(float(v) for v in self.points)
        if not pts:
            raise ArgumentError("PointSet1D needs at least one point")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ArgumentError(f"PointSet1D points must be strictly increasing, got {pts}")
        if self.orientation not in (1, -1):
            raise ArgumentError(f"Orientation must be +1 or -1, got {self.orientation}")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return 1

    @property
    def reach(self) -> float:
        return self.min_gap / 2.0

    @property
    def min_gap(self) -> float:
        """Smallest distance between neighbouring points (``inf`` for a single point)."""
        if len(self.points) == 1:
            return float("inf")
        return float(np.min(np.diff(self.points)))

    @property
    def _xi(self) -> np.ndarray:
        return np.asarray(self.points)

    def nearest_index(self, x: np.ndarray) -> np.ndarray:
        """Index of the nearest point for every row of an ``(n, 1)`` array."""
        values = x[:, 0]
        xi = self._xi
        right = np.clip(np.searchsorted(xi, values), 0, len(xi) - 1)
        left = np.clip(right - 1, 0, len(xi) - 1)
        d_left = np.abs(values - xi[left])
        d_right = np.abs(values - xi[right])
        if np.any((left != right) & (d_left == d_right)):
            raise DomainError("Projection is not unique at the midpoint of two discontinuity points")
        return np.where(d_left < d_right, left, right)

    def _project(self, x: np.ndarray) -> np.ndarray:
        return self._xi[self.nearest_index(x)][:, None]

    def _normal(self, xi: np.ndarray) -> np.ndarray:
        return np.ones_like(xi)

    def _signed_distance(self, x: np.ndarray) -> np.ndarray:
        values = x[:, 0]
        xi = self._xi
        right = np.clip(np.searchsorted(xi, values), 0, len(xi) - 1)
        left = np.clip(right - 1, 0, len(xi) - 1)
        to_left = values - xi[left]
        to_right = values - xi[right]
        return np.where(np.abs(to_left) <= np.abs(to_right), to_left, to_right)

    def _crossings(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        low = np.minimum(x[:, 0], y[:, 0])
        high = np.maximum(x[:, 0], y[:, 0])
        xi = self._xi
        return np.searchsorted(xi, high, side="right") - np.searchsorted(xi, low, side="left")

    def sample_points(self, count: int = 0, seed: int = 0) -> np.ndarray:
        return self._xi[:, None].copy()

    def bounding_box(self, margin: float) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([self.points[0] - margin]), np.array([self.points[-1] + margin])

    def describe(self) -> str:
        return "pointset1d(" + ",".join(format_number(v) for v in self.points) + ")"

    def flipped(self) -> "PointSet1D":
        return replace(self, orientation=-self.orientation)
