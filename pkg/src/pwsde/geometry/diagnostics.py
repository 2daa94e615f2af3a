"""Sampling diagnostics for piecewise Lipschitz functions."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import ArgumentError, SamplingError
from ..utils import row_norms
from .base import Hypersurface

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Box:
    """Axis-aligned sampling region ``[low, high]``.

    When ``max_separation`` is set, the second point of each pair is drawn
    uniformly from the cube of that half-width around the first one, which
    measures local slopes instead of long-range differences.
    """

    low: Sequence[float]
    high: Sequence[float]
    max_separation: Optional[float] = None

    def __post_init__(self) -> None:
        low = np.asarray(self.low, dtype=float)
        high = np.asarray(self.high, dtype=float)
        if low.shape != high.shape or low.ndim != 1 or np.any(high <= low):
            raise ArgumentError(f"Invalid sampling box [{self.low}, {self.high}]")
        object.__setattr__(self, "low", tuple(low))
        object.__setattr__(self, "high", tuple(high))

    @property
    def dim(self) -> int:
        return len(self.low)

    def sample_pairs(self, rng: np.random.Generator, count: int):
        low, high = np.asarray(self.low), np.asarray(self.high)
        x = rng.uniform(low, high, size=(count, self.dim))
        if self.max_separation is None:
            y = rng.uniform(low, high, size=(count, self.dim))
        else:
            step = rng.uniform(-self.max_separation, self.max_separation, size=(count, self.dim))
            y = np.clip(x + step, low, high)
        return x, y


def lipschitz_quotient_estimate(
    f: Callable[[np.ndarray], np.ndarray],
    surface: Optional[Hypersurface],
    sampler: Box,
    n_pairs: int,
    rng_seed: int,
    allow_crossing: bool = False,
) -> float:
    """Lower bound on the piecewise Lipschitz constant of ``f``.

    Only pairs whose segment avoids the surface are admissible, so the
    Euclidean distance equals the intrinsic distance and the quotient is the
    intrinsic-metric quotient. With ``allow_crossing`` every pair counts and
    the plain Euclidean quotient is estimated instead.

    Args:
        f: Vectorised function mapping ``(n, d)`` to ``(n, ...)``.
        surface: Exceptional set, or None for a globally defined quotient.
        sampler: Region the pairs are drawn from.
        n_pairs: Number of admissible pairs to evaluate.
        rng_seed: Seed for the pair sampler.
        allow_crossing: Admit pairs whose segment meets the surface.

    Returns:
        Maximum of ``||f(x) - f(y)|| / ||x - y||`` over the admissible pairs.

    Raises:
        ArgumentError: If ``n_pairs`` is not positive.
        SamplingError: If too few admissible pairs turn up.
    """
    if n_pairs < 1:
        raise ArgumentError(f"n_pairs must be at least 1, got {n_pairs}")
    if surface is not None and surface.dim != sampler.dim:
        raise ArgumentError(f"Sampler dimension {sampler.dim} does not match surface dimension {surface.dim}")

    rng = np.random.default_rng(rng_seed)
    budget = 100 * n_pairs
    attempts = 0
    found = 0
    best = 0.0
    while found < n_pairs:
        if attempts >= budget:
            raise SamplingError(
                f"Only {found} admissible pairs after {attempts} attempts (needed {n_pairs})"
            )
        batch = min(max(n_pairs - found, 64), budget - attempts)
        x, y = sampler.sample_pairs(rng, batch)
        attempts += batch
        keep = np.any(x != y, axis=1)
        if surface is not None and not allow_crossing:
            keep &= surface.segment_crosses(x, y) == 0
        x, y = x[keep][: n_pairs - found], y[keep][: n_pairs - found]
        if x.shape[0] == 0:
            continue
        found += x.shape[0]
        quotients = row_norms(np.asarray(f(x)) - np.asarray(f(y))) / row_norms(x - y)
        best = max(best, float(np.max(quotients)))

    logger.debug(f"Lipschitz quotient estimate {best:.6g} from {found} pairs ({attempts} attempts)")
    return best
