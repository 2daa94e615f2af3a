from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from ..errors import ArgumentError, DomainError
from ..utils import format_number
from .base import Hypersurface


@dataclass(frozen=True)
class Sphere(Hypersurface):
    """Sphere ``{x : ||x - center|| = radius}`` with outward default normal."""

    center: Tuple[float, ...]
    radius: float
    orientation: int = 1

    def __post_init__(self) -> None:
        if len(self.center) < 2:
            raise ArgumentError("Sphere needs dimension >= 2; use PointSet1D in one dimension")
        if not self.radius > 0:
            raise ArgumentError(f"Sphere radius must be positive, got {self.radius}")
        if self.orientation not in (1, -1):
            raise ArgumentError(f"Orientation must be +1 or -1, got {self.orientation}")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def reach(self) -> float:
        return self.radius

    @property
    def _c(self) -> np.ndarray:
        return np.asarray(self.center)

    def _radial(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        offset = x - self._c
        return offset, np.linalg.norm(offset, axis=1)

    def _project(self, x: np.ndarray) -> np.ndarray:
        offset, norms = self._radial(x)
        if np.any(norms <= 1e-12 * self.radius):
            raise DomainError("Projection onto a sphere is not unique at its center")
        return self._c + self.radius * offset / norms[:, None]

    def _normal(self, xi: np.ndarray) -> np.ndarray:
        offset, norms = self._radial(xi)
        return offset / norms[:, None]

    def _signed_distance(self, x: np.ndarray) -> np.ndarray:
        return self._radial(x)[1] - self.radius

    def _crossings(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        # Roots of ||w + t v||^2 = r^2 on [0, 1]
        v = y - x
        w = x - self._c
        a = np.einsum("ij,ij->i", v, v)
        b = np.einsum("ij,ij->i", w, v)
        c = np.einsum("ij,ij->i", w, w) - self.radius ** 2
        counts = np.zeros(x.shape[0], dtype=int)

        degenerate = a == 0.0
        counts[degenerate] = (c[degenerate] == 0.0).astype(int)

        disc = b * b - a * c
        regular = ~degenerate & (disc >= 0.0)
        root = np.sqrt(np.where(regular, disc, 0.0))
        safe_a = np.where(regular, a, 1.0)
        t1 = (-b - root) / safe_a
        t2 = (-b + root) / safe_a
        inside1 = regular & (t1 >= 0.0) & (t1 <= 1.0)
        inside2 = regular & (disc > 0.0) & (t2 >= 0.0) & (t2 <= 1.0)
        counts += inside1.astype(int) + inside2.astype(int)
        return counts

    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        if self.dim == 2:
            angles = 2.0 * np.pi * (np.arange(count) + rng.random()) / count
            directions = np.column_stack([np.cos(angles), np.sin(angles)])
        else:
            directions = rng.standard_normal((count, self.dim))
            directions /= np.linalg.norm(directions, axis=1)[:, None]
        return self._c + self.radius * directions

    def bounding_box(self, margin: float) -> Tuple[np.ndarray, np.ndarray]:
        extent = self.radius + margin
        return self._c - extent, self._c + extent

    def describe(self) -> str:
        coords = ",".join(format_number(v) for v in self.center)
        return f"sphere({coords};{format_number(self.radius)})"

    def flipped(self) -> "Sphere":
        return replace(self, orientation=-self.orientation)
