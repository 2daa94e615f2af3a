"""The transform G that removes the drift discontinuity, and its transformed SDE.

``G(x) = x + alpha(p(x)) * phi_tilde(x)`` with
``phi_tilde(x) = s(x) |s(x)| phi(|s(x)| / c)``, where ``s`` is the signed
distance to the exceptional set, ``p`` the projection onto it and ``phi`` the
bump ``(1 - u^2)^3``. In one dimension this is the classical
``x + alpha (x - xi) |x - xi| phi((x - xi) / c)`` summed over the points.
"""

import logging
import math
import threading
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import ArgumentError, ConstructionError, DomainError, ModelError, NumericError
from .geometry import Box, Hypersurface, PointSet1D, lipschitz_quotient_estimate
from .models.problem import SdeProblem
from .utils import as_batch, restore, row_norms

logger = logging.getLogger(__name__)

# One-sided limit steps; the third only feeds the convergence check.
LIMIT_STEPS = (1e-4, 5e-5, 2.5e-5)
NONDEGENERACY_FLOOR = 1e-8
ON_SURFACE = 1e-12
NUDGE_TRIGGER = 1e-10
NUDGE = 1e-8
MAX_INVERSE_ITERATIONS = 200
CERTIFICATE_BOUND = 0.5
MAX_HALVINGS = 40
# Used when neither the reach nor alpha bounds c.
UNBOUNDED_C = 1.0
MEMO_QUANTUM = 1e-6


def bump(u):
    """``(1 + u)^3 (1 - u)^3`` on ``[-1, 1]`` and zero elsewhere."""
    u = np.asarray(u, dtype=float)
    values = np.where(np.abs(u) <= 1.0, (1.0 - u * u) ** 3, 0.0)
    return float(values) if values.ndim == 0 else values


def bump_derivative(u):
    u = np.asarray(u, dtype=float)
    values = np.where(np.abs(u) <= 1.0, -6.0 * u * (1.0 - u * u) ** 2, 0.0)
    return float(values) if values.ndim == 0 else values


def bump_second_derivative(u):
    u = np.asarray(u, dtype=float)
    w = 1.0 - u * u
    values = np.where(np.abs(u) <= 1.0, w * (30.0 * u * u - 6.0), 0.0)
    return float(values) if values.ndim == 0 else values


def alpha_1d(mu_left: float, mu_right: float, sigma_at_xi: float) -> float:
    """Jump offset making the transformed drift continuous at a point.

    Raises:
        ModelError: If the drift jumps where the diffusion vanishes.
    """
    if mu_left == mu_right:
        return 0.0
    if sigma_at_xi == 0.0:
        raise ModelError(
            f"Drift jumps from {mu_left} to {mu_right} where the diffusion vanishes"
        )
    return (mu_left - mu_right) / (2.0 * sigma_at_xi ** 2)


def _one_sided_quotients(problem: SdeProblem, xi: np.ndarray, normals: np.ndarray, h: float) -> np.ndarray:
    return problem.evaluate_drift(xi - h * normals) - problem.evaluate_drift(xi + h * normals)


def alpha_surface(problem: SdeProblem, xi, surface: Optional[Hypersurface] = None, check: bool = True) -> np.ndarray:
    """Jump offset field on the exceptional set.

    ``alpha(xi) = lim (mu(xi - h n) - mu(xi + h n)) / (2 ||sigma(xi)^T n||^2)``,
    with the limit taken by Richardson extrapolation from ``h = 1e-4`` and
    ``h = 5e-5``.

    Args:
        problem: SDE whose drift jumps across the surface.
        xi: Surface point ``(d,)`` or batch ``(m, d)``.
        surface: Exceptional set; defaults to the problem's.
        check: Also extrapolate from ``(5e-5, 2.5e-5)`` and require both
            limits to agree.

    Raises:
        ArgumentError: If no surface is available.
        ModelError: If ``||sigma^T n||^2`` is below ``1e-8``.
        NumericError: If the one-sided limits do not settle.
    """
    surface = surface or problem.surface
    if surface is None:
        raise ArgumentError(f"Problem {problem.name} has no exceptional set")
    points, single = as_batch(xi, problem.dim)
    normals = surface.unit_normal(points)
    sigma = problem.evaluate_diffusion(points)
    sigma_t_n = np.einsum("mij,mi->mj", sigma, normals)
    nondegeneracy = np.einsum("mj,mj->m", sigma_t_n, sigma_t_n)
    if np.any(nondegeneracy < NONDEGENERACY_FLOOR):
        worst = points[np.argmin(nondegeneracy)]
        raise ModelError(
            f"||sigma^T n||^2 = {nondegeneracy.min():.3g} < {NONDEGENERACY_FLOOR} at surface point {worst}"
        )
    denom = 2.0 * nondegeneracy[:, None]

    h1, h2, h3 = LIMIT_STEPS
    q1 = _one_sided_quotients(problem, points, normals, h1) / denom
    q2 = _one_sided_quotients(problem, points, normals, h2) / denom
    alpha = 2.0 * q2 - q1

    if check:
        q3 = _one_sided_quotients(problem, points, normals, h3) / denom
        residual = row_norms(alpha - (2.0 * q3 - q2))
        scale = row_norms(problem.evaluate_drift(points)) + 1.0
        tolerance = 1e-5 * row_norms(alpha) + 1e-8 * scale / denom[:, 0]
        if np.any(residual > tolerance):
            worst = int(np.argmax(residual - tolerance))
            raise NumericError(
                f"One-sided drift limits do not converge at {points[worst]} "
                f"(residual {residual[worst]:.3g})",
                state=points[worst],
            )
    return restore(alpha, single)


class PointAlpha:
    """Per-point offsets ``alpha_k`` for a :class:`PointSet1D`."""

    def __init__(self, surface: PointSet1D, values) -> None:
        self.surface = surface
        self.values = np.asarray(values, dtype=float).reshape(-1)
        if self.values.shape[0] != len(surface.points):
            raise ArgumentError(
                f"Expected {len(surface.points)} alpha values, got {self.values.shape[0]}"
            )

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        return self.values[self.surface.nearest_index(xi)][:, None]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


class SurfaceAlpha:
    """Offset field evaluated on demand at surface points.

    With ``memoize`` the values are cached under surface coordinates rounded
    to ``1e-6``; the cache is guarded by a lock so one field may serve
    several worker threads.
    """

    def __init__(self, problem: SdeProblem, surface: Hypersurface, memoize: bool = False) -> None:
        self.problem = problem
        self.surface = surface
        self.memoize = memoize
        self._memo: Dict[Tuple[int, ...], np.ndarray] = {}
        self._lock = threading.Lock()

    def __call__(self, xi: np.ndarray) -> np.ndarray:
        if not self.memoize:
            return alpha_surface(self.problem, xi, self.surface, check=False)

        keys = [tuple(row) for row in np.round(xi / MEMO_QUANTUM).astype(np.int64)]
        out = np.empty_like(xi)
        with self._lock:
            missing = [i for i, key in enumerate(keys) if key not in self._memo]
        if missing:
            fresh = alpha_surface(self.problem, xi[missing], self.surface, check=False)
            with self._lock:
                for i, value in zip(missing, fresh):
                    self._memo.setdefault(keys[i], value)
        with self._lock:
            for i, key in enumerate(keys):
                out[i] = self._memo[key]
        return out

    def sup_norm(self, count: int = 512, seed: int = 0) -> float:
        points = self.surface.sample_points(count, seed)
        return float(np.max(row_norms(self(points))))


@dataclass(frozen=True)
class AssumptionReport:
    """Sampled checks of the regularity assumptions near the exceptional set."""

    min_nondegeneracy: float
    sup_drift: float
    sup_diffusion: float
    alpha_tangent_slope: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "min_nondegeneracy": self.min_nondegeneracy,
            "sup_drift": self.sup_drift,
            "sup_diffusion": self.sup_diffusion,
            "alpha_tangent_slope": self.alpha_tangent_slope,
        }


class Transform:
    """The map ``G`` with inverse, derivatives and transformed coefficients.

    A transform without a surface is the identity; it is what Lipschitz
    problems get.
    """

    def __init__(
        self,
        surface: Optional[Hypersurface],
        alpha=None,
        c: Optional[float] = None,
        problem: Optional[SdeProblem] = None,
    ) -> None:
        """Initialize a Transform.

        Args:
            surface: Exceptional set, or None for the identity.
            alpha: Offset field, callable on ``(m, d)`` surface points.
            c: Half-width of the band the transform acts on.
            problem: SDE the transform was built for; needed for the
                transformed coefficients.

        Raises:
            ArgumentError: If ``c`` is not positive or exceeds the reach.
        """
        self.surface = surface
        self.alpha = alpha
        self.problem = problem
        self.certificate: Optional[float] = None
        self.assumptions: Optional[AssumptionReport] = None
        self._sup_alpha: Optional[float] = None

        if surface is None:
            self.c = 0.0
            self.dim = problem.dim if problem is not None else None
            return
        if alpha is None or c is None:
            raise ArgumentError("A transform with a surface needs both alpha and c")
        if not c > 0 or not math.isfinite(c):
            raise ArgumentError(f"c must be positive and finite, got {c}")
        if c > surface.reach:
            raise ArgumentError(f"c = {c} exceeds the reach {surface.reach} of {surface.describe()}")
        self.c = float(c)
        self.dim = surface.dim
        self.step = max(1e-6, self.c * 1e-5)

    @classmethod
    def identity(cls, problem: Optional[SdeProblem] = None) -> "Transform":
        return cls(surface=None, problem=problem)

    @property
    def is_identity(self) -> bool:
        return self.surface is None

    @property
    def is_one_dimensional(self) -> bool:
        return isinstance(self.surface, PointSet1D)

    @property
    def sup_alpha(self) -> float:
        """Largest offset norm over a sample of surface points."""
        if self.is_identity:
            return 0.0
        if self._sup_alpha is None:
            self._sup_alpha = self.alpha.sup_norm()
        return self._sup_alpha

    def _dim_of(self, x) -> int:
        if self.dim is not None:
            return self.dim
        arr = np.asarray(x)
        return 1 if arr.ndim == 0 else arr.shape[-1]

    def _perturbation(self, x: np.ndarray, kappa: Optional[np.ndarray] = None) -> np.ndarray:
        """``G(x) - x``; with ``kappa`` the smooth branch of that side is used instead."""
        s = self.surface.signed_distance(x)
        out = np.zeros_like(x)
        mask = np.abs(s) < self.c
        if not np.any(mask):
            return out
        sm = s[mask]
        p = self.surface.project(x[mask])
        weight = sm * np.abs(sm) if kappa is None else kappa[mask] * sm * sm
        out[mask] = self.alpha(p) * (weight * bump(sm / self.c))[:, None]
        return out

    def forward(self, x) -> np.ndarray:
        """Apply ``G``; points at distance ``>= c`` from the surface are returned unchanged."""
        points, single = as_batch(x, self._dim_of(x))
        if self.is_identity:
            return restore(points.copy(), single)
        return restore(points + self._perturbation(points), single)

    def inverse(self, z, return_iterations: bool = False):
        """Apply ``G^-1`` by the fixed-point iteration ``x <- z - (G(x) - x)``.

        Points farther than ``c (1 + 6 sup|alpha| c)`` from the surface lie
        outside the image of the band and are returned unchanged.

        Args:
            z: Point ``(d,)`` or batch ``(n, d)``.
            return_iterations: Also return the per-point iteration counts.

        Raises:
            NumericError: If some point has not converged after 200 iterations.
        """
        targets, single = as_batch(z, self._dim_of(z))
        x = targets.copy()
        iterations = np.zeros(targets.shape[0], dtype=int)
        if not self.is_identity:
            margin = self.c * (1.0 + 6.0 * self.sup_alpha * self.c)
            active = np.flatnonzero(self.surface.distance(targets) < margin)
            tolerance = 1e-12 * (1.0 + row_norms(targets))
            for iteration in range(1, MAX_INVERSE_ITERATIONS + 1):
                if active.size == 0:
                    break
                current = x[active]
                update = targets[active] - self._perturbation(current)
                converged = row_norms(update - current) <= tolerance[active]
                x[active] = update
                iterations[active] = iteration
                active = active[~converged]
            if active.size:
                raise NumericError(
                    f"Inverse transform did not converge for {active.size} point(s) "
                    f"in {MAX_INVERSE_ITERATIONS} iterations",
                    state=targets[active],
                )
        result = restore(x, single)
        if return_iterations:
            return result, restore(iterations, single)
        return result

    def _sides(self, points: np.ndarray, side) -> np.ndarray:
        s = self.surface.signed_distance(points)
        if side is None:
            if np.any(np.abs(s) < ON_SURFACE):
                raise DomainError("G is not twice differentiable on the exceptional set; pass an explicit side")
            return np.where(s < 0.0, -1.0, 1.0)
        return np.broadcast_to(np.asarray(side, dtype=float), s.shape).copy()

    def _derivatives_1d(self, points: np.ndarray, kappa: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        s = self.surface.signed_distance(points)
        u = s / self.c
        inside = np.abs(s) < self.c
        alpha = np.zeros_like(s)
        if np.any(inside):
            alpha[inside] = self.alpha(self.surface.project(points[inside]))[:, 0]
        phi, dphi, ddphi = bump(u), bump_derivative(u), bump_second_derivative(u)
        first = kappa * (2.0 * s * phi + s * s * dphi / self.c)
        second = kappa * (2.0 * phi + 4.0 * s * dphi / self.c + s * s * ddphi / self.c ** 2)
        slope = 1.0 + alpha * self.surface.orientation * first
        curvature = alpha * second
        return slope[:, None, None], curvature[:, None, None, None]

    def _derivatives_nd(
        self, points: np.ndarray, kappa: np.ndarray, with_hessian: bool
    ) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        n, d = points.shape
        h = self.step
        eye = np.eye(d)
        jac = np.broadcast_to(eye, (n, d, d)).copy()
        hess = np.zeros((n, d, d, d)) if with_hessian else None
        mask = self.surface.distance(points) < self.c
        if not np.any(mask):
            return jac, hess

        x = points[mask]
        k = kappa[mask]

        def g(y):
            return self._perturbation(y, k)

        plus = [g(x + h * eye[j]) for j in range(d)]
        minus = [g(x - h * eye[j]) for j in range(d)]
        dg = np.stack([(plus[j] - minus[j]) / (2.0 * h) for j in range(d)], axis=-1)
        jac[mask] += dg
        if with_hessian:
            centre = g(x)
            block = np.zeros((x.shape[0], d, d, d))
            for j in range(d):
                block[:, :, j, j] = (plus[j] - 2.0 * centre + minus[j]) / (h * h)
                for m in range(j + 1, d):
                    mixed = (
                        g(x + h * eye[j] + h * eye[m])
                        - g(x + h * eye[j] - h * eye[m])
                        - g(x - h * eye[j] + h * eye[m])
                        + g(x - h * eye[j] - h * eye[m])
                    ) / (4.0 * h * h)
                    block[:, :, j, m] = mixed
                    block[:, :, m, j] = mixed
            hess[mask] = block
        return jac, hess

    def _derivatives(self, points: np.ndarray, kappa: np.ndarray, with_hessian: bool):
        if self.is_one_dimensional:
            return self._derivatives_1d(points, kappa)
        return self._derivatives_nd(points, kappa, with_hessian)

    def jacobian(self, x, side=None) -> np.ndarray:
        """Jacobian of ``G``.

        In one dimension the closed form of the bump is used; otherwise
        central differences with step ``max(1e-6, 1e-5 c)`` on the branch of
        ``G`` belonging to the side of ``x``.

        Args:
            x: Point ``(d,)`` or batch ``(n, d)``.
            side: ``+1``/``-1`` per point to pick a one-sided derivative;
                inferred from the signed distance when omitted.

        Raises:
            DomainError: If ``x`` lies on the surface and no side is given.
        """
        points, single = as_batch(x, self._dim_of(x))
        if self.is_identity:
            return restore(np.broadcast_to(np.eye(points.shape[1]), (points.shape[0],) + (points.shape[1],) * 2).copy(), single)
        jac, _ = self._derivatives(points, self._sides(points, side), with_hessian=False)
        return restore(jac, single)

    def hessian_apply(self, x, A, side=None) -> np.ndarray:
        """Itô correction ``1/2 sum_jk d^2 G_i / dx_j dx_k A_jk`` for every component ``i``."""
        points, single = as_batch(x, self._dim_of(x))
        weights = np.asarray(A, dtype=float).reshape(points.shape[0], points.shape[1], points.shape[1])
        if self.is_identity:
            return restore(np.zeros_like(points), single)
        _, hess = self._derivatives(points, self._sides(points, side), with_hessian=True)
        return restore(0.5 * np.einsum("nijk,njk->ni", hess, weights), single)

    def transformed_coefficients(self, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Back-transformed state and the coefficients of the SDE for ``Z = G(X)``.

        States numerically on the surface are nudged by ``1e-8`` along the
        normal of their side before the derivatives are taken.

        Returns:
            Tuple ``(x, mu_tilde, sigma_tilde, iterations)`` for the batch ``z``.

        Raises:
            ModelError: If the transform was built without a problem.
        """
        if self.problem is None:
            raise ModelError("Transformed coefficients need the SdeProblem the transform was built for")
        targets, _ = as_batch(z, self.problem.dim)
        x, iterations = self.inverse(targets, return_iterations=True)
        mu = self.problem.evaluate_drift(x)
        sigma = self.problem.evaluate_diffusion(x)
        if self.is_identity:
            return x, mu, sigma, iterations

        s = self.surface.signed_distance(x)
        mask = np.abs(s) < self.c
        if np.any(mask):
            xm = x[mask].copy()
            kappa = np.where(s[mask] < 0.0, -1.0, 1.0)
            near = np.abs(s[mask]) < NUDGE_TRIGGER
            if np.any(near):
                normals = self.surface.unit_normal(self.surface.project(xm[near]))
                xm[near] += (kappa[near] * NUDGE)[:, None] * normals
            mu_m = self.problem.evaluate_drift(xm)
            sigma_m = self.problem.evaluate_diffusion(xm)
            jac, hess = self._derivatives(xm, kappa, with_hessian=True)
            covariance = sigma_m @ np.swapaxes(sigma_m, 1, 2)
            mu = mu.copy()
            sigma = sigma.copy()
            mu[mask] = np.einsum("nij,nj->ni", jac, mu_m) + 0.5 * np.einsum("nijk,njk->ni", hess, covariance)
            sigma[mask] = jac @ sigma_m
        return x, mu, sigma, iterations

    def transformed_drift(self, z) -> np.ndarray:
        """Drift ``mu_tilde`` of the transformed SDE."""
        _, single = as_batch(z, self._dim_of(z))
        return restore(self.transformed_coefficients(z)[1], single)

    def transformed_diffusion(self, z) -> np.ndarray:
        """Diffusion ``sigma_tilde`` of the transformed SDE."""
        _, single = as_batch(z, self._dim_of(z))
        return restore(self.transformed_coefficients(z)[2], single)

    def inverse_lipschitz(self, n_pairs: int = 2000, seed: int = 0) -> float:
        """Sampled lower bound on the Lipschitz constant of ``G^-1`` near the surface."""
        if self.is_identity:
            return 1.0
        low, high = self.surface.bounding_box(2.0 * self.c)
        box = Box(low, high, max_separation=self.c)
        return lipschitz_quotient_estimate(self.inverse, self.surface, box, n_pairs, seed, allow_crossing=True)

    def summary(self) -> Dict[str, Any]:
        """Construction parameters for the sidecar file."""
        if self.is_identity:
            return {"surface": None, "c": 0.0, "sup_alpha": 0.0, "certificate": 0.0}
        info = {
            "surface": self.surface.describe(),
            "c": self.c,
            "sup_alpha": self.sup_alpha,
            "certificate": self.certificate,
        }
        if self.assumptions is not None:
            info.update(self.assumptions.to_dict())
        return info


def contraction_certificate(transform: Transform, seed: int = 0, surface_points: int = 64, offsets: int = 8) -> float:
    """Largest operator norm of the Jacobian of ``G - id`` on a sampled band grid.

    The grid places ``2 * offsets`` points along the normal of every sampled
    surface point, on both sides, at jittered distances below ``c``.
    """
    if transform.is_identity:
        return 0.0
    surface = transform.surface
    rng = np.random.default_rng(seed)
    xi = surface.sample_points(surface_points, seed)
    normals = surface.unit_normal(xi)
    fractions = (np.arange(1, offsets + 1) + rng.uniform(-0.4, 0.4, size=offsets)) / (offsets + 1)
    distances = np.concatenate([fractions, -fractions]) * transform.c
    points = (xi[:, None, :] + distances[None, :, None] * normals[:, None, :]).reshape(-1, surface.dim)
    perturbation_jac = transform.jacobian(points) - np.eye(surface.dim)
    return float(np.max(np.linalg.norm(perturbation_jac, ord=2, axis=(1, 2))))


def choose_c(problem: SdeProblem, alpha, surface: Hypersurface, seed: int = 0) -> float:
    """Pick the localization constant ``c``.

    One dimension: ``0.9 min(1 / (6 max|alpha_k|), min_gap / 2, reach)``.
    Otherwise start from ``0.9 min(reach, 1 / (6 sup|alpha|))`` and halve
    until the contraction certificate is at most ``1/2``.

    Raises:
        ConstructionError: If 40 halvings do not produce a certified ``c``.
    """
    sup_alpha = alpha.sup_norm()
    alpha_bound = 1.0 / (6.0 * sup_alpha) if sup_alpha > 0 else math.inf

    if isinstance(surface, PointSet1D):
        c = 0.9 * min(alpha_bound, surface.min_gap / 2.0, surface.reach)
        if not math.isfinite(c):
            c = UNBOUNDED_C
        logger.debug(f"c = {c:.6g} for {surface.describe()} (max |alpha| = {sup_alpha:.6g})")
        return c

    c = 0.9 * min(surface.reach, alpha_bound)
    if not math.isfinite(c):
        c = UNBOUNDED_C
    for halving in range(MAX_HALVINGS + 1):
        trial = Transform(surface, alpha, c, problem)
        trial._sup_alpha = sup_alpha
        norm = contraction_certificate(trial, seed)
        if norm <= CERTIFICATE_BOUND:
            logger.debug(f"c = {c:.6g} certified with norm {norm:.4f} after {halving} halvings")
            return c
        logger.debug(f"Certificate norm {norm:.4f} > {CERTIFICATE_BOUND} at c = {c:.6g}; halving")
        c /= 2.0
    raise ConstructionError(
        f"Transform for {surface.describe()} not certifiable: contraction certificate still fails "
        f"after {MAX_HALVINGS} halvings of c"
    )


def validate_assumptions(
    problem: SdeProblem, surface: Hypersurface, eps: float, seed: int = 0, count: int = 128
) -> AssumptionReport:
    """Sample the regularity assumptions the transform relies on.

    Checks non-degeneracy of ``sigma^T n`` and finiteness of the coefficients
    on the band of half-width ``eps``, and estimates the tangential slope of
    ``alpha`` by first differences along the surface.

    Raises:
        ModelError: If ``||sigma^T n||^2 < 1e-8`` somewhere on the sample or
            the coefficients are not finite near the surface.
    """
    rng = np.random.default_rng(seed)
    xi = surface.sample_points(count, seed)
    normals = surface.unit_normal(xi)
    sigma_t_n = np.einsum("mij,mi->mj", problem.evaluate_diffusion(xi), normals)
    nondegeneracy = np.einsum("mj,mj->m", sigma_t_n, sigma_t_n)
    if isinstance(surface, PointSet1D):
        # Only points where the drift actually jumps need noise.
        jumps = np.abs(_one_sided_quotients(problem, xi, normals, LIMIT_STEPS[1]))[:, 0] > 1e-12
        nondegeneracy = np.where(jumps, nondegeneracy, np.inf)
    min_nondegeneracy = float(np.min(nondegeneracy))
    if min_nondegeneracy < NONDEGENERACY_FLOOR:
        raise ModelError(f"||sigma^T n||^2 = {min_nondegeneracy:.3g} below {NONDEGENERACY_FLOOR} on the surface")

    offsets = rng.uniform(-eps, eps, size=xi.shape[0])
    band = xi + offsets[:, None] * normals
    drift = problem.evaluate_drift(band)
    diffusion = problem.evaluate_diffusion(band)
    if not (np.all(np.isfinite(drift)) and np.all(np.isfinite(diffusion))):
        raise ModelError(f"Coefficients of {problem.name} are not finite near {surface.describe()}")

    slope = 0.0
    if not isinstance(surface, PointSet1D):
        raw = rng.standard_normal(xi.shape)
        tangents = raw - np.einsum("ij,ij->i", raw, normals)[:, None] * normals
        tangents /= row_norms(tangents)[:, None]
        moved = surface.project(xi + 1e-4 * tangents)
        change = row_norms(alpha_surface(problem, moved, surface) - alpha_surface(problem, xi, surface))
        slope = float(np.max(change / row_norms(moved - xi)))
        if not math.isfinite(slope):
            raise ModelError(f"Offset field of {problem.name} is not differentiable along {surface.describe()}")

    report = AssumptionReport(
        min_nondegeneracy=min_nondegeneracy,
        sup_drift=float(np.max(row_norms(drift))),
        sup_diffusion=float(np.max(row_norms(diffusion))),
        alpha_tangent_slope=slope,
    )
    logger.debug(f"Assumption report for {problem.name}: {report}")
    return report


def _point_alpha(problem: SdeProblem, surface: PointSet1D) -> PointAlpha:
    xi = surface.sample_points()
    normals = surface.unit_normal(xi)
    h1, h2, _ = LIMIT_STEPS
    below = 2.0 * problem.evaluate_drift(xi - h2 * normals) - problem.evaluate_drift(xi - h1 * normals)
    above = 2.0 * problem.evaluate_drift(xi + h2 * normals) - problem.evaluate_drift(xi + h1 * normals)
    sigma = problem.evaluate_diffusion(xi)[:, 0, 0]
    values = [alpha_1d(float(lo), float(hi), float(sd)) for lo, hi, sd in zip(below[:, 0], above[:, 0], sigma)]
    return PointAlpha(surface, values)


def build_transform(
    problem: SdeProblem,
    surface: Optional[Hypersurface] = None,
    c: Optional[float] = None,
    validate: bool = True,
    seed: int = 0,
    memoize: bool = False,
) -> Transform:
    """Precompute the transform for a problem: offsets, ``c`` and its certificate.

    Args:
        problem: SDE to transform.
        surface: Exceptional set; defaults to the problem's. Without one the
            identity transform is returned.
        c: Fixed localization constant; chosen by :func:`choose_c` when omitted.
        validate: Run :func:`validate_assumptions` first.
        seed: Seed of the validation grids.
        memoize: Cache offsets evaluated away from the sample grid.

    Raises:
        ModelError: If an assumption is violated.
        ConstructionError: If the certificate fails.
    """
    surface = surface or problem.surface
    if surface is None:
        logger.info(f"Problem {problem.name} has no exceptional set; using the identity transform")
        return Transform.identity(problem)

    if isinstance(surface, PointSet1D):
        alpha = _point_alpha(problem, surface)
    else:
        alpha_surface(problem, surface.sample_points(64, seed), surface, check=True)
        alpha = SurfaceAlpha(problem, surface, memoize=memoize)

    assumptions = None
    if validate:
        band = surface.reach if math.isfinite(surface.reach) else 1.0
        assumptions = validate_assumptions(problem, surface, 0.5 * band, seed)

    chosen = c is None
    if chosen:
        c = choose_c(problem, alpha, surface, seed)
    transform = Transform(surface, alpha, c, problem)
    transform.assumptions = assumptions
    transform.certificate = contraction_certificate(transform, seed + 1)
    if transform.certificate > CERTIFICATE_BOUND:
        message = f"Certificate norm {transform.certificate:.4f} exceeds {CERTIFICATE_BOUND} at c = {c:.6g}"
        if chosen and not transform.is_one_dimensional:
            raise ConstructionError(message)
        logger.warning(message)
    logger.info(
        f"Built transform for {problem.name}: c = {transform.c:.6g}, "
        f"sup|alpha| = {transform.sup_alpha:.6g}, certificate = {transform.certificate:.4f}"
    )
    return transform
