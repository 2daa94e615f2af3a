"""Deterministic Brownian increments with exact dyadic coarsening.

Every Gaussian is addressed by ``(seed, path, word)`` in a Philox
counter-based stream, so any block of any path can be regenerated without
sequential state. Increments are snapped to a dyadic lattice, which makes
every aggregation of them exact in double precision.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence, Tuple

import numpy as np
from scipy.special import ndtri

from .errors import ArgumentError

logger = logging.getLogger(__name__)

# Philox produces four 64-bit words per counter value.
WORDS_PER_COUNTER = 4
LATTICE_BITS = 40
UINT64_MASK = (1 << 64) - 1
# Fine increments generated per block when streaming long grids.
DEFAULT_BLOCK = 1 << 14


def lattice_quantum(horizon: float) -> float:
    """Spacing of the dyadic lattice increments are rounded to."""
    scale = math.ceil(0.5 * math.log2(horizon))
    return 2.0 ** (scale - LATTICE_BITS)


def _standard_normals(key: int, start_word: int, count: int) -> np.ndarray:
    block, offset = divmod(start_word, WORDS_PER_COUNTER)
    raw = np.random.Philox(key=key, counter=block).random_raw(offset + count)[offset:]
    # Midpoint rule keeps every uniform strictly inside (0, 1).
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(uniforms)


@dataclass(frozen=True)
class BrownianGrid:
    """Finest-level Brownian increments for one or more paths.

    Attributes:
        seed: Master seed shared by all paths of the experiment.
        dim: Dimension of the Brownian motion.
        horizon: Time horizon ``T``.
        levels: Refinement level ``L``; the finest step is ``T * 2**-L``.
        paths: Path indices; each path has its own Philox key.
    """

    seed: int
    dim: int
    horizon: float
    levels: int
    paths: Tuple[int, ...] = (0,)

    @property
    def fine_steps(self) -> int:
        return 1 << self.levels

    @property
    def fine_delta(self) -> float:
        return self.horizon / self.fine_steps

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def quantum(self) -> float:
        return lattice_quantum(self.horizon)

    def path_key(self, path: int) -> int:
        """128-bit Philox key of a path: the seed in the low word, the path index in the high word."""
        return (self.seed & UINT64_MASK) | ((path & UINT64_MASK) << 64)

    def fine_increments(self, start: int = 0, stop: int = None) -> np.ndarray:
        """Finest increments with indices in ``[start, stop)``.

        Returns:
            Array of shape ``(stop - start, n_paths, dim)``.
        """
        stop = self.fine_steps if stop is None else stop
        if not 0 <= start <= stop <= self.fine_steps:
            raise ArgumentError(f"Increment range [{start}, {stop}) outside [0, {self.fine_steps})")
        if "increments" in self.__dict__:
            return self.increments[start:stop]

        count = stop - start
        scale = math.sqrt(self.fine_delta)
        q = self.quantum
        out = np.empty((count, self.n_paths, self.dim))
        for column, path in enumerate(self.paths):
            z = _standard_normals(self.path_key(path), start * self.dim, count * self.dim)
            out[:, column, :] = (np.round(z * scale / q) * q).reshape(count, self.dim)
        return out

    @cached_property
    def increments(self) -> np.ndarray:
        """All ``2**levels`` finest increments, shape ``(2**levels, n_paths, dim)``."""
        return self.fine_increments(0, self.fine_steps)


def sample_brownian(
    seed: int,
    dim: int,
    horizon: float,
    levels: int,
    paths: Sequence[int] = (0,),
) -> BrownianGrid:
    """Create the Brownian grid for ``(seed, dim, horizon, levels)``.

    Increments are produced lazily; the grid is immutable and may be shared
    between threads.

    Raises:
        ArgumentError: For negative levels, non-positive dimension or horizon,
            or invalid path indices.
    """
    if int(levels) != levels or levels < 0:
        raise ArgumentError(f"levels must be a non-negative integer, got {levels}")
    if int(dim) != dim or dim < 1:
        raise ArgumentError(f"dim must be a positive integer, got {dim}")
    if not horizon > 0 or not math.isfinite(horizon):
        raise ArgumentError(f"horizon must be positive and finite, got {horizon}")
    paths = tuple(int(p) for p in paths)
    if not paths or any(p < 0 for p in paths):
        raise ArgumentError(f"paths must be a non-empty sequence of non-negative indices, got {paths}")
    return BrownianGrid(seed=int(seed), dim=int(dim), horizon=float(horizon), levels=int(levels), paths=paths)


def coarsening_ratio(grid: BrownianGrid, step_count: int) -> int:
    """Number of finest increments per step when the grid is walked with ``step_count`` steps.

    Raises:
        ArgumentError: If ``step_count`` does not divide ``2**levels``.
    """
    if int(step_count) != step_count or step_count < 1 or grid.fine_steps % step_count:
        raise ArgumentError(f"step_count {step_count} does not divide 2**{grid.levels}")
    return grid.fine_steps // int(step_count)


def increments_at(grid: BrownianGrid, step_count: int, start: int = 0, stop: int = None) -> np.ndarray:
    """Brownian increments over ``step_count`` equal steps.

    Each increment is the exact sum of the finest increments it covers.

    Args:
        grid: Brownian grid.
        step_count: Number of steps over ``[0, T]``; must divide ``2**levels``.
        start: First coarse step to return.
        stop: One past the last coarse step (defaults to ``step_count``).

    Returns:
        Array of shape ``(stop - start, n_paths, dim)``.
    """
    ratio = coarsening_ratio(grid, step_count)
    stop = step_count if stop is None else stop
    fine = grid.fine_increments(start * ratio, stop * ratio)
    if ratio == 1:
        return fine
    return fine.reshape(stop - start, ratio, grid.n_paths, grid.dim).sum(axis=1)


def iter_increments(
    grid: BrownianGrid, step_count: int, block: int = DEFAULT_BLOCK
) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield ``(first_step, increments)`` blocks covering all ``step_count`` steps in order."""
    ratio = coarsening_ratio(grid, step_count)
    steps_per_block = max(1, block // ratio)
    for start in range(0, step_count, steps_per_block):
        stop = min(step_count, start + steps_per_block)
        yield start, increments_at(grid, step_count, start, stop)


def brownian_values(grid: BrownianGrid, step_count: int) -> np.ndarray:
    """Brownian motion at the ``step_count + 1`` grid times, shape ``(step_count + 1, n_paths, dim)``."""
    values = np.zeros((step_count + 1, grid.n_paths, grid.dim))
    np.cumsum(increments_at(grid, step_count), axis=0, out=values[1:])
    return values
