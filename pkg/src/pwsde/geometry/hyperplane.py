import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from ..errors import ArgumentError
from ..utils import format_number
from .base import Hypersurface

logger = logging.getLogger(__name__)

# Half-width of the patch used when a finite sample of the plane is needed.
SAMPLE_EXTENT = 2.0


@dataclass(frozen=True)
class Hyperplane(Hypersurface):
    """Hyperplane ``{x : a.x = b}``; the default normal is ``+a``.

    A non-unit ``normal`` is rescaled together with ``offset`` so that the
    stored normal always has unit length.
    """

    normal: Tuple[float, ...]
    offset: float
    orientation: int = 1

    def __post_init__(self) -> None:
        a = np.asarray(self.normal, dtype=float)
        length = float(np.linalg.norm(a))
        if a.ndim != 1 or a.size == 0 or not length > 0:
            raise ArgumentError(f"Hyperplane normal must be a non-zero vector, got {self.normal}")
        if self.orientation not in (1, -1):
            raise ArgumentError(f"Orientation must be +1 or -1, got {self.orientation}")
        if abs(length - 1.0) > 1e-12:
            logger.debug(f"Rescaling hyperplane normal of length {length}")
        object.__setattr__(self, "normal", tuple(float(v) for v in a / length))
        object.__setattr__(self, "offset", float(self.offset) / length)

    @property
    def dim(self) -> int:
        return len(self.normal)

    @property
    def reach(self) -> float:
        return float("inf")

    @property
    def _a(self) -> np.ndarray:
        return np.asarray(self.normal)

    def _project(self, x: np.ndarray) -> np.ndarray:
        return x - self._signed_distance(x)[:, None] * self._a

    def _normal(self, xi: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self._a, xi.shape).copy()

    def _signed_distance(self, x: np.ndarray) -> np.ndarray:
        return x @ self._a - self.offset

    def _crossings(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        fx = self._signed_distance(x)
        fy = self._signed_distance(y)
        # A touching endpoint counts as one crossing.
        return ((fx * fy < 0.0) | (fx == 0.0) | (fy == 0.0)).astype(int)

    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        anchor = self.offset * self._a
        raw = anchor + rng.uniform(-SAMPLE_EXTENT, SAMPLE_EXTENT, size=(count, self.dim))
        return self._project(raw)

    def bounding_box(self, margin: float) -> Tuple[np.ndarray, np.ndarray]:
        anchor = self.offset * self._a
        extent = SAMPLE_EXTENT + margin
        return anchor - extent, anchor + extent

    def describe(self) -> str:
        coords = ",".join(format_number(v) for v in self.normal)
        return f"hyperplane({coords};{format_number(self.offset)})"

    def flipped(self) -> "Hyperplane":
        return replace(self, orientation=-self.orientation)
