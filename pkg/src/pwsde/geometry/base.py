from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from ..errors import ArgumentError
from ..utils import as_batch, restore

# Points closer than this to the surface are treated as lying on it.
SURFACE_TOLERANCE = 1e-9


class Hypersurface(ABC):
    """Abstract exceptional set of positive reach.

    Concrete variants implement the unoriented primitives; this class adds
    shape handling and the orientation convention. ``orientation`` is ``+1``
    for the variant's default normal and ``-1`` for the flipped one.
    """

    dim: int
    orientation: int

    @property
    @abstractmethod
    def reach(self) -> float:
        """Radius of the band on which the projection is unique."""

    @abstractmethod
    def _project(self, x: np.ndarray) -> np.ndarray:
        """Nearest surface point for every row of ``x``."""

    @abstractmethod
    def _normal(self, xi: np.ndarray) -> np.ndarray:
        """Default-orientation unit normal at surface points ``xi``."""

    @abstractmethod
    def _signed_distance(self, x: np.ndarray) -> np.ndarray:
        """Default-orientation signed distance for every row of ``x``."""

    @abstractmethod
    def _crossings(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Number of intersections of the segments ``[x_i, y_i]`` with the surface."""

    @abstractmethod
    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        """Deterministic sample of surface points, shape ``(m, dim)``."""

    @abstractmethod
    def bounding_box(self, margin: float) -> Tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box containing the part of the surface that matters, padded by ``margin``."""

    @abstractmethod
    def describe(self) -> str:
        """Surface in the configuration grammar, e.g. ``sphere(0,0;1)``."""

    @abstractmethod
    def flipped(self) -> "Hypersurface":
        """Same surface with the opposite normal orientation."""

    def project(self, x) -> np.ndarray:
        """Project onto the surface.

        Args:
            x: Point ``(dim,)`` or batch ``(n, dim)``.

        Returns:
            The unique nearest surface point(s).

        Raises:
            DomainError: If a point has no unique nearest point.
        """
        points, single = as_batch(x, self.dim)
        return restore(self._project(points), single)

    def unit_normal(self, xi) -> np.ndarray:
        """Oriented unit normal at surface point(s); off-surface points are projected first."""
        points, single = as_batch(xi, self.dim)
        off = np.abs(self._signed_distance(points)) > SURFACE_TOLERANCE
        if np.any(off):
            points = points.copy()
            points[off] = self._project(points[off])
        return restore(self.orientation * self._normal(points), single)

    def signed_distance(self, x) -> np.ndarray:
        """Oriented signed distance; positive on the side the normal points to."""
        points, single = as_batch(x, self.dim)
        values = self.orientation * self._signed_distance(points)
        return values[0] if single else values

    def distance(self, x) -> np.ndarray:
        """Unsigned Euclidean distance to the surface."""
        return np.abs(self.signed_distance(x))

    def in_band(self, x, eps: float):
        """Membership in the open band of half-width ``eps`` around the surface.

        Raises:
            ArgumentError: If ``eps`` is not positive.
        """
        if not eps > 0:
            raise ArgumentError(f"Band width must be positive, got {eps}")
        return self.distance(x) < eps

    def segment_crosses(self, x, y):
        """Count intersections of the straight segment(s) from ``x`` to ``y`` with the surface."""
        xs, single = as_batch(x, self.dim)
        ys, _ = as_batch(y, self.dim)
        if xs.shape != ys.shape:
            raise ArgumentError(f"Segment endpoints have mismatched shapes {xs.shape} and {ys.shape}")
        counts = self._crossings(xs, ys)
        return int(counts[0]) if single else counts

    def side(self, x) -> np.ndarray:
        """Side of the surface as ``+1``/``-1``; points on the surface count as ``+1``."""
        return np.where(self.signed_distance(x) < 0.0, -1.0, 1.0)
