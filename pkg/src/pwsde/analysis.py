"""Monte Carlo estimates: strong errors, convergence orders and band diagnostics.

Paths are simulated in vectorised batches. Batches may run on worker
threads, but their partial sums are always merged in batch order, so the
estimates do not depend on the number of workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from scipy.stats import norm

from .brownian import BrownianGrid, brownian_values, sample_brownian
from .errors import ArgumentError
from .models.problem import SdeProblem
from .models.reports import (
    ConvergenceReport,
    ConvergenceRow,
    DecompositionReport,
    DecompositionRow,
    ExcursionReport,
    ExcursionRow,
    OccupationReport,
    OccupationRow,
)
from .solvers import Scheme, euler_maruyama_path, solve, solve_gm
from .transform import Transform, build_transform

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95
DEFAULT_BATCH_SIZE = 1000
EXCURSION_SUB_POINTS = 8
NESTING_RATIO = 4

T = TypeVar("T")


@dataclass
class MomentAccumulator:
    """Mergeable running sums of a sample."""

    total: float = 0.0
    total_sq: float = 0.0
    count: int = 0

    def add(self, values) -> "MomentAccumulator":
        values = np.asarray(values, dtype=float).reshape(-1)
        self.total += float(values.sum())
        self.total_sq += float(np.dot(values, values))
        self.count += values.size
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        return MomentAccumulator(self.total + other.total, self.total_sq + other.total_sq, self.count + other.count)

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else 0.0

    @property
    def variance(self) -> float:
        """Unbiased sample variance (zero below two samples)."""
        if self.count < 2:
            return 0.0
        return max(0.0, (self.total_sq - self.count * self.mean ** 2) / (self.count - 1))


def path_batches(n_paths: int, batch_size: Optional[int] = None) -> List[Tuple[int, ...]]:
    """Split path indices ``0..n_paths-1`` into consecutive batches."""
    if int(n_paths) != n_paths or n_paths < 1:
        raise ArgumentError(f"n_paths must be a positive integer, got {n_paths}")
    size = DEFAULT_BATCH_SIZE if batch_size is None else int(batch_size)
    if size < 1:
        raise ArgumentError(f"batch_size must be positive, got {batch_size}")
    return [tuple(range(start, min(n_paths, start + size))) for start in range(0, n_paths, size)]


def _map_batches(fn: Callable[[Tuple[int, ...]], T], batches: Sequence[Tuple[int, ...]], workers: int) -> List[T]:
    if workers <= 1 or len(batches) == 1:
        return [fn(batch) for batch in batches]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, batches))


def _merge_columns(partials: Iterable[List[MomentAccumulator]]) -> List[MomentAccumulator]:
    merged: Optional[List[MomentAccumulator]] = None
    for partial in partials:
        merged = partial if merged is None else [a.merge(b) for a, b in zip(merged, partial)]
    return merged


def step_count_for(problem: SdeProblem, delta: float) -> int:
    """Number of steps of size ``delta`` covering ``[0, T]``.

    Raises:
        ArgumentError: If ``delta`` does not divide the horizon.
    """
    if not delta > 0:
        raise ArgumentError(f"Step size must be positive, got {delta}")
    steps = round(problem.horizon / delta)
    if steps < 1 or abs(steps * delta - problem.horizon) > 1e-9 * problem.horizon:
        raise ArgumentError(f"Step size {delta} does not divide the horizon {problem.horizon}")
    return int(steps)


def levels_for(step_count: int) -> int:
    """Dyadic level of a power-of-two step count."""
    levels = int(step_count).bit_length() - 1
    if step_count < 1 or 1 << levels != step_count:
        raise ArgumentError(f"Step count {step_count} is not a power of two")
    return levels


def _nested_step_counts(problem: SdeProblem, deltas: Sequence[float], ref_levels: int) -> List[Tuple[float, int]]:
    if not deltas:
        raise ArgumentError("At least one step size is required")
    if int(ref_levels) != ref_levels or ref_levels < 0:
        raise ArgumentError(f"ref_levels must be a non-negative integer, got {ref_levels}")
    fine = 1 << int(ref_levels)
    counts = []
    for delta in sorted(set(float(d) for d in deltas), reverse=True):
        steps = step_count_for(problem, delta)
        if fine % steps:
            raise ArgumentError(f"Step size {delta} is not nested in the reference grid 2^-{ref_levels}")
        counts.append((delta, steps))
    ratio = fine // counts[-1][1]
    if ratio < NESTING_RATIO:
        logger.warning(
            f"Reference step is only {ratio}x finer than the smallest step size; "
            f"at least {NESTING_RATIO}x keeps the reference bias below the measured error"
        )
    return counts


def _max_sq_deviation(path: np.ndarray, reference: np.ndarray) -> np.ndarray:
    diff = path - reference
    return np.max(np.einsum("knd,knd->kn", diff, diff), axis=0)


def _error_row(delta: float, moments: MomentAccumulator) -> ConvergenceRow:
    error = math.sqrt(moments.mean)
    z = norm.ppf(0.5 + CONFIDENCE / 2.0)
    half_width = 0.0
    if error > 0:
        half_width = z * math.sqrt(moments.variance) / math.sqrt(moments.count) / (2.0 * error)
    return ConvergenceRow(delta=delta, error=error, n_paths=moments.count, ci_half_width=half_width)


def _exact_reference(problem: SdeProblem, grid: BrownianGrid, step_count: int) -> np.ndarray:
    times = np.arange(step_count + 1)[:, None, None] * (problem.horizon / step_count)
    values = problem.exact(problem.initial, times, brownian_values(grid, step_count))
    return np.asarray(values, dtype=float).reshape(step_count + 1, grid.n_paths, problem.dim)


def _transform_for(problem: SdeProblem, transform: Optional[Transform]) -> Transform:
    return build_transform(problem) if transform is None else transform


def strong_error(
    problem: SdeProblem,
    scheme: Union[Scheme, str],
    deltas: Sequence[float],
    n_paths: int,
    master_seed: int,
    ref_levels: int,
    reference: str = "gm",
    transform: Optional[Transform] = None,
    batch_size: Optional[int] = None,
    workers: int = 1,
) -> ConvergenceReport:
    """Estimate ``E[max_grid ||X_t - X^delta_t||^2]^(1/2)`` for every step size.

    Every path is driven by one Brownian grid at level ``ref_levels``; the
    reference is GM at the finest step (or the exact solution) on the same
    grid, compared at the coarse grid points.

    Args:
        problem: SDE to approximate.
        scheme: Scheme under test.
        deltas: Step sizes; each must divide the horizon and be a multiple
            of the reference step.
        n_paths: Number of Monte Carlo paths.
        master_seed: Seed of the Brownian grids.
        ref_levels: Level of the reference grid.
        reference: ``"gm"`` or ``"exact"``.
        transform: Transform to use; built from the problem when needed.
        batch_size: Paths simulated together.
        workers: Threads running batches.

    Raises:
        ArgumentError: If the step sizes are not nested or the reference is
            unavailable.
    """
    scheme = Scheme(scheme)
    counts = _nested_step_counts(problem, deltas, ref_levels)
    if reference not in ("gm", "exact"):
        raise ArgumentError(f"Unknown reference '{reference}'; expected 'gm' or 'exact'")
    if reference == "exact" and problem.exact is None:
        raise ArgumentError(f"Problem {problem.name} has no exact solution")
    if scheme is Scheme.GM or reference == "gm":
        transform = _transform_for(problem, transform)

    fine = 1 << int(ref_levels)
    finest = counts[-1][1]

    def run_batch(paths: Tuple[int, ...]) -> List[MomentAccumulator]:
        grid = sample_brownian(master_seed, problem.dim, problem.horizon, ref_levels, paths)
        if reference == "exact":
            ref = _exact_reference(problem, grid, finest)
        else:
            ref = solve_gm(problem, transform, grid, fine, stride=fine // finest).path
        moments = []
        for _, steps in counts:
            approx = solve(scheme, problem, grid, steps, transform).path
            moments.append(MomentAccumulator().add(_max_sq_deviation(approx, ref[:: finest // steps])))
        logger.debug(f"Strong-error batch of {len(paths)} paths starting at {paths[0]} done")
        return moments

    merged = _merge_columns(_map_batches(run_batch, path_batches(n_paths, batch_size), workers))
    report = ConvergenceReport(
        problem=problem.name,
        scheme=scheme.value,
        reference=reference,
        reference_delta=problem.horizon / fine,
        rows=[_error_row(delta, moments) for (delta, _), moments in zip(counts, merged)],
    )
    usable = [row for row in report.rows if row.error > 0]
    if len(usable) >= 3:
        report.fitted_order, report.intercept = fit_order(report)
    logger.info(
        f"Strong error of {scheme.value.upper()} on {problem.name}: {len(report.rows)} step sizes, "
        f"{n_paths} paths, fitted order {report.fitted_order}"
    )
    return report


def fit_order(report: Union[ConvergenceReport, Sequence[Tuple[float, float]]]) -> Tuple[float, float]:
    """Least-squares fit of ``log2(error)`` against ``log2(delta)``.

    Returns:
        Tuple ``(slope, intercept)``; the slope is the empirical strong order.

    Raises:
        ArgumentError: If fewer than three rows have a positive error.
    """
    if isinstance(report, ConvergenceReport):
        pairs = [(row.delta, row.error) for row in report.rows]
    else:
        pairs = [(float(d), float(e)) for d, e in report]
    usable = [(d, e) for d, e in pairs if e > 0 and d > 0]
    if len(usable) < len(pairs):
        logger.warning(f"Excluding {len(pairs) - len(usable)} row(s) with non-positive error from the fit")
    if len(usable) < 3:
        raise ArgumentError(f"Need at least 3 rows with positive error to fit an order, got {len(usable)}")
    x = np.log2([d for d, _ in usable])
    y = np.log2([e for _, e in usable])
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(slope), float(intercept)


def _check_band(problem: SdeProblem, eps_list: Sequence[float]) -> List[float]:
    if problem.surface is None:
        raise ArgumentError(f"Problem {problem.name} has no exceptional set")
    if not eps_list:
        raise ArgumentError("At least one band width is required")
    widths = sorted(float(e) for e in eps_list)
    for eps in widths:
        if not eps > 0:
            raise ArgumentError(f"Band width must be positive, got {eps}")
        if eps > problem.surface.reach:
            raise ArgumentError(f"Band width {eps} exceeds the reach {problem.surface.reach}")
    return widths


def occupation_time(
    problem: SdeProblem,
    delta: float,
    eps_list: Sequence[float],
    n_paths: int,
    master_seed: int,
    batch_size: Optional[int] = None,
    workers: int = 1,
) -> OccupationReport:
    """Estimate the mean time ``delta * #{j < N : X_j in band}`` of the Euler-Maruyama path.

    Raises:
        ArgumentError: If the problem has no surface or a width is not in
            ``(0, reach]``.
    """
    widths = _check_band(problem, eps_list)
    steps = step_count_for(problem, delta)
    levels = levels_for(steps)

    def run_batch(paths: Tuple[int, ...]) -> List[MomentAccumulator]:
        grid = sample_brownian(master_seed, problem.dim, problem.horizon, levels, paths)
        path = euler_maruyama_path(problem, grid, steps)[:-1]
        distance = problem.surface.distance(path.reshape(-1, problem.dim)).reshape(path.shape[:2])
        return [MomentAccumulator().add(delta * np.count_nonzero(distance < eps, axis=0)) for eps in widths]

    merged = _merge_columns(_map_batches(run_batch, path_batches(n_paths, batch_size), workers))
    report = OccupationReport(
        problem=problem.name,
        horizon=problem.horizon,
        rows=[OccupationRow(eps, delta, m.mean, m.count) for eps, m in zip(widths, merged)],
    )
    logger.info(f"Occupation times of {problem.name} at delta={delta}: ratios {report.ratios}")
    return report


def _excursion_maxima(
    problem: SdeProblem, delta: float, n_paths: int, master_seed: int, batch_size: Optional[int], workers: int
) -> np.ndarray:
    steps = step_count_for(problem, delta)
    levels = levels_for(steps) + levels_for(EXCURSION_SUB_POINTS)
    offsets = np.arange(1, EXCURSION_SUB_POINTS + 1) * (delta / EXCURSION_SUB_POINTS)

    def run_batch(paths: Tuple[int, ...]) -> np.ndarray:
        grid = sample_brownian(master_seed, problem.dim, problem.horizon, levels, paths)
        states = euler_maruyama_path(problem, grid, steps)[:-1].reshape(-1, problem.dim)
        mu = problem.evaluate_drift(states).reshape(steps, 1, len(paths), problem.dim)
        sigma = problem.evaluate_diffusion(states).reshape(steps, len(paths), problem.dim, problem.dim)
        w = brownian_values(grid, steps * EXCURSION_SUB_POINTS)
        # Sub-point k of step j sits at fine index 8j + k, k = 1..8.
        within = w[1:].reshape(steps, EXCURSION_SUB_POINTS, len(paths), problem.dim) - w[:-1:EXCURSION_SUB_POINTS][:, None]
        moves = mu * offsets[None, :, None, None] + np.einsum("snij,sknj->skni", sigma, within)
        return np.sqrt(np.max(np.einsum("sknd,sknd->skn", moves, moves), axis=(0, 1)))

    return np.concatenate(_map_batches(run_batch, path_batches(n_paths, batch_size), workers))


def excursion_report(
    problem: SdeProblem,
    delta: float,
    eps_list: Sequence[float],
    n_paths: int,
    master_seed: int,
    batch_size: Optional[int] = None,
    workers: int = 1,
) -> ExcursionReport:
    """Excursion probabilities for several thresholds from one set of paths.

    Each step is sampled at 8 equally spaced points of the interpolation
    ``X_j + mu(X_j)(s - t_j) + sigma(X_j)(W_s - W_j)``, using Brownian values
    from three levels below the step.

    Raises:
        ArgumentError: If a threshold is not positive.
    """
    if not eps_list:
        raise ArgumentError("At least one threshold is required")
    thresholds = sorted(float(e) for e in eps_list)
    if thresholds[0] <= 0:
        raise ArgumentError(f"Excursion threshold must be positive, got {thresholds[0]}")
    maxima = _excursion_maxima(problem, delta, n_paths, master_seed, batch_size, workers)
    report = ExcursionReport(
        problem=problem.name,
        rows=[ExcursionRow(eps, delta, float(np.mean(maxima > eps)), n_paths) for eps in thresholds],
    )
    logger.info(f"Excursion probabilities of {problem.name} at delta={delta}: "
                f"{[row.probability for row in report.rows]}")
    return report


def excursion_probability(
    problem: SdeProblem,
    delta: float,
    eps: float,
    n_paths: int,
    master_seed: int,
    batch_size: Optional[int] = None,
    workers: int = 1,
) -> float:
    """Probability that some step's interpolation moves further than ``eps`` from its start."""
    return excursion_report(problem, delta, [eps], n_paths, master_seed, batch_size, workers).rows[0].probability


def error_decomposition(
    problem: SdeProblem,
    deltas: Sequence[float],
    n_paths: int,
    master_seed: int,
    ref_levels: int,
    transform: Optional[Transform] = None,
    batch_size: Optional[int] = None,
    workers: int = 1,
) -> DecompositionReport:
    """Split the Euler-Maruyama error into its two transformed-space terms.

    Per step size: the L2-sup distance of Euler-Maruyama on the transformed
    SDE from the transformed reference, and its L2-sup distance from
    ``G(X^delta)`` for the Euler-Maruyama path ``X^delta``.
    """
    counts = _nested_step_counts(problem, deltas, ref_levels)
    transform = _transform_for(problem, transform)
    fine = 1 << int(ref_levels)
    finest = counts[-1][1]

    def run_batch(paths: Tuple[int, ...]) -> List[MomentAccumulator]:
        grid = sample_brownian(master_seed, problem.dim, problem.horizon, ref_levels, paths)
        ref = solve_gm(problem, transform, grid, fine, stride=fine // finest, keep_transformed=True).transformed_path
        moments = []
        for _, steps in counts:
            z = solve_gm(problem, transform, grid, steps, keep_transformed=True).transformed_path
            x = euler_maruyama_path(problem, grid, steps)
            gx = transform.forward(x.reshape(-1, problem.dim)).reshape(x.shape)
            moments.append(MomentAccumulator().add(_max_sq_deviation(z, ref[:: finest // steps])))
            moments.append(MomentAccumulator().add(_max_sq_deviation(z, gx)))
        return moments

    merged = _merge_columns(_map_batches(run_batch, path_batches(n_paths, batch_size), workers))
    rows = []
    for index, (delta, _) in enumerate(counts):
        transformed, mismatch = merged[2 * index], merged[2 * index + 1]
        rows.append(DecompositionRow(delta, math.sqrt(transformed.mean), math.sqrt(mismatch.mean), transformed.count))
    logger.info(f"Error decomposition of {problem.name}: {len(rows)} step sizes, {n_paths} paths")
    return DecompositionReport(problem=problem.name, reference_delta=problem.horizon / fine, rows=rows)


def inverse_lipschitz_estimate(transform: Transform, n_pairs: int = 2000, seed: int = 0) -> float:
    """Sampled Lipschitz constant of ``G^-1``, a constant in both error bounds."""
    value = transform.inverse_lipschitz(n_pairs, seed)
    logger.info(f"Estimated Lipschitz constant of the inverse transform: {value:.6g}")
    return value
