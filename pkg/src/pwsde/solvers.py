"""Euler-Maruyama on the original SDE and the transformed (GM) scheme."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np

from .brownian import BrownianGrid, coarsening_ratio, iter_increments
from .errors import ArgumentError, ModelError, NumericError
from .models.problem import SdeProblem
from .transform import Transform

logger = logging.getLogger(__name__)


class Scheme(str, Enum):
    EM = "em"
    GM = "gm"


@dataclass
class SchemeOutput:
    """Grid values of one scheme for every path of a Brownian grid.

    Attributes:
        scheme: Scheme that produced the path.
        step_count: Number of time steps ``N``.
        stride: Only every ``stride``-th grid value is stored.
        times: Times of the stored values, shape ``(K,)``.
        path: Approximation in original coordinates, shape ``(K, n_paths, d)``.
        in_band: Band membership of the stored values, shape ``(K, n_paths)``,
            or None when no band was requested.
        inverse_iterations: Fixed-point iterations spent on every stored
            back-transformation (GM only).
        transformed_path: The internal ``Z`` values (GM only, on request).
    """

    scheme: Scheme
    step_count: int
    stride: int
    times: np.ndarray
    path: np.ndarray
    in_band: Optional[np.ndarray] = None
    inverse_iterations: Optional[np.ndarray] = None
    transformed_path: Optional[np.ndarray] = None

    @property
    def final(self) -> np.ndarray:
        return self.path[-1]

    @property
    def n_paths(self) -> int:
        return self.path.shape[1]


def _check_stride(step_count: int, stride: int) -> int:
    if int(stride) != stride or stride < 1 or step_count % stride:
        raise ArgumentError(f"stride {stride} does not divide step_count {step_count}")
    return step_count // int(stride) + 1


def _check_grid(problem: SdeProblem, grid: BrownianGrid, step_count: int) -> float:
    if grid.dim != problem.dim:
        raise ArgumentError(f"Brownian dimension {grid.dim} does not match problem dimension {problem.dim}")
    if abs(grid.horizon - problem.horizon) > 1e-12 * problem.horizon:
        raise ArgumentError(f"Grid horizon {grid.horizon} does not match problem horizon {problem.horizon}")
    coarsening_ratio(grid, step_count)
    return problem.horizon / step_count


def _check_finite(mu: np.ndarray, sigma: np.ndarray, step: int, state: np.ndarray) -> None:
    bad = ~(np.all(np.isfinite(mu), axis=1) & np.all(np.isfinite(sigma), axis=(1, 2)))
    if np.any(bad):
        raise NumericError("Non-finite drift or diffusion", step=step, state=state[bad])


def _euler_step(state: np.ndarray, mu: np.ndarray, sigma: np.ndarray, delta: float, dw: np.ndarray) -> np.ndarray:
    return state + mu * delta + np.einsum("nij,nj->ni", sigma, dw)


def _walk(
    start: np.ndarray,
    coefficients: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]],
    grid: BrownianGrid,
    step_count: int,
    stride: int,
    delta: float,
) -> np.ndarray:
    records = np.empty((_check_stride(step_count, stride), grid.n_paths, start.shape[1]))
    state = start
    for first, block in iter_increments(grid, step_count):
        for offset, dw in enumerate(block):
            step = first + offset
            if step % stride == 0:
                records[step // stride] = state
            mu, sigma = coefficients(state)
            _check_finite(mu, sigma, step, state)
            state = _euler_step(state, mu, sigma, delta, dw)
    records[-1] = state
    return records


def euler_maruyama_path(problem: SdeProblem, grid: BrownianGrid, step_count: int, stride: int = 1) -> np.ndarray:
    """Euler-Maruyama approximation driven by the grid's increments.

    Args:
        problem: SDE to approximate.
        grid: Brownian grid; every path in it is simulated.
        step_count: Number of steps ``N``; must divide ``2**grid.levels``.
        stride: Keep every ``stride``-th grid value.

    Returns:
        Array of shape ``(N / stride + 1, n_paths, d)`` starting at the
        initial value.

    Raises:
        ArgumentError: If the grid does not fit the problem or ``N``.
        NumericError: If the coefficients return non-finite values.
    """
    delta = _check_grid(problem, grid, step_count)
    start = np.tile(problem.initial, (grid.n_paths, 1))

    def coefficients(state):
        return problem.evaluate_drift(state), problem.evaluate_diffusion(state)

    return _walk(start, coefficients, grid, step_count, stride, delta)


def _times(problem: SdeProblem, step_count: int, stride: int) -> np.ndarray:
    return np.arange(0, step_count + 1, stride) * (problem.horizon / step_count)


def solve_em(
    problem: SdeProblem,
    grid: BrownianGrid,
    step_count: int,
    stride: int = 1,
    band_width: Optional[float] = None,
) -> SchemeOutput:
    """Plain Euler-Maruyama on the discontinuous coefficients.

    With ``band_width`` and a problem surface, the stored values are flagged
    by membership in the band of that half-width.
    """
    path = euler_maruyama_path(problem, grid, step_count, stride)
    in_band = None
    if band_width is not None and problem.surface is not None:
        in_band = problem.surface.in_band(path.reshape(-1, problem.dim), band_width).reshape(path.shape[:2])
    return SchemeOutput(
        scheme=Scheme.EM,
        step_count=step_count,
        stride=stride,
        times=_times(problem, step_count, stride),
        path=path,
        in_band=in_band,
    )


def solve_gm(
    problem: SdeProblem,
    transform: Transform,
    grid: BrownianGrid,
    step_count: int,
    stride: int = 1,
    keep_transformed: bool = False,
) -> SchemeOutput:
    """Euler-Maruyama on ``Z = G(X)`` followed by ``X = G^-1(Z)`` at every stored time.

    Outside the band of the transform the coefficients and ``G`` are the
    identity, so the recursion coincides with :func:`solve_em` there.

    Raises:
        ArgumentError: If the grid does not fit the problem or ``N``, or the
            transform was built for another dimension.
        ModelError: If the transform was built without a problem.
        NumericError: If inversion fails or the coefficients are not finite.
    """
    delta = _check_grid(problem, grid, step_count)
    if not transform.is_identity and transform.dim != problem.dim:
        raise ArgumentError(f"Transform dimension {transform.dim} does not match problem dimension {problem.dim}")
    if transform.problem is None:
        raise ModelError("The GM scheme needs a transform built for an SdeProblem")

    count = _check_stride(step_count, stride)
    shape = (count, grid.n_paths, problem.dim)
    path = np.empty(shape)
    transformed = np.empty(shape) if keep_transformed else None
    iterations = np.zeros(shape[:2], dtype=int)

    def record(index, x, z, iters):
        path[index] = x
        iterations[index] = iters
        if transformed is not None:
            transformed[index] = z

    z = np.tile(transform.forward(problem.initial), (grid.n_paths, 1))
    for first, block in iter_increments(grid, step_count):
        for offset, dw in enumerate(block):
            step = first + offset
            x, mu, sigma, iters = transform.transformed_coefficients(z)
            if step % stride == 0:
                record(step // stride, x, z, iters)
            _check_finite(mu, sigma, step, x)
            z = _euler_step(z, mu, sigma, delta, dw)
    x, iters = transform.inverse(z, return_iterations=True)
    record(count - 1, x, z, iters)
    path[0] = problem.initial

    in_band = None
    if not transform.is_identity:
        in_band = transform.surface.distance(path.reshape(-1, problem.dim)).reshape(shape[:2]) < transform.c
    logger.debug(
        f"GM run of {problem.name}: {grid.n_paths} paths, {step_count} steps, "
        f"max inverse iterations {int(iterations.max())}"
    )
    return SchemeOutput(
        scheme=Scheme.GM,
        step_count=step_count,
        stride=stride,
        times=_times(problem, step_count, stride),
        path=path,
        in_band=in_band,
        inverse_iterations=iterations,
        transformed_path=transformed,
    )


def solve(
    scheme: Scheme,
    problem: SdeProblem,
    grid: BrownianGrid,
    step_count: int,
    transform: Optional[Transform] = None,
    stride: int = 1,
) -> SchemeOutput:
    """Dispatch to :func:`solve_em` or :func:`solve_gm`."""
    scheme = Scheme(scheme)
    if scheme is Scheme.EM:
        band = None if transform is None or transform.is_identity else transform.c
        return solve_em(problem, grid, step_count, stride, band_width=band)
    if transform is None:
        raise ArgumentError("The GM scheme needs a transform")
    return solve_gm(problem, transform, grid, step_count, stride)
