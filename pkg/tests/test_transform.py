"""Tests for the transform G, its inverse, derivatives and construction."""

import numpy as np
import pytest

from pwsde import transform as transform_module
from pwsde.errors import ArgumentError, ConstructionError, DomainError, ModelError, NumericError
from pwsde.geometry import Box, Hyperplane, PointSet1D, Sphere, lipschitz_quotient_estimate
from pwsde.models.problem import SdeProblem
from pwsde.models.registry import circle2d, gbm1d, step1d
from pwsde.transform import (
    PointAlpha,
    SurfaceAlpha,
    Transform,
    alpha_1d,
    alpha_surface,
    bump,
    bump_derivative,
    bump_second_derivative,
    build_transform,
    choose_c,
    contraction_certificate,
    validate_assumptions,
)


@pytest.fixture
def unit_step():
    """Fixture providing the 1D transform with xi = 0, alpha = 1 and c = 0.1."""
    surface = PointSet1D((0.0,))
    return Transform(surface, PointAlpha(surface, [1.0]), 0.1, step1d())


@pytest.fixture(scope="module")
def circle_transform():
    """Fixture providing the certified transform of the unit-circle problem."""
    return build_transform(circle2d())


def _degenerate_circle():
    return SdeProblem(
        name="flat",
        dim=2,
        drift=lambda x: np.where((np.sum(x * x, axis=1) <= 1.0)[:, None], 0.0, 1.0),
        diffusion=lambda x: np.zeros((x.shape[0], 2, 2)),
        initial=(0.5, 0.0),
        horizon=1.0,
        surface=Sphere((0.0, 0.0), 1.0),
    )


class TestBump:
    """Tests for the bump function and its derivatives."""

    @pytest.mark.parametrize("u,expected", [(0.0, 1.0), (1.0, 0.0), (-1.0, 0.0), (0.5, 0.421875), (2.0, 0.0)])
    def test_values(self, u, expected):
        assert bump(u) == pytest.approx(expected)

    def test_vanishes_to_second_order_at_edges(self):
        for u in (-1.0, 1.0):
            assert bump_derivative(u) == 0.0
            assert bump_second_derivative(u) == 0.0

    def test_derivatives_match_finite_differences(self):
        u = np.linspace(-0.95, 0.95, 41)
        h = 1e-5
        assert np.allclose(bump_derivative(u), (bump(u + h) - bump(u - h)) / (2 * h), atol=1e-8)
        assert np.allclose(
            bump_second_derivative(u), (bump_derivative(u + h) - bump_derivative(u - h)) / (2 * h), atol=1e-7
        )


class TestAlpha:
    """Tests for the jump offsets."""

    @pytest.mark.parametrize("args,expected", [((1.0, -1.0, 1.0), 1.0), ((0.0, 0.0, 1.0), 0.0), ((2.0, 0.0, 0.5), 4.0)])
    def test_alpha_1d(self, args, expected):
        assert alpha_1d(*args) == pytest.approx(expected)

    def test_alpha_1d_without_noise_raises(self):
        with pytest.raises(ModelError, match="diffusion vanishes"):
            alpha_1d(1.0, -1.0, 0.0)

    def test_alpha_1d_without_jump_ignores_sigma(self):
        assert alpha_1d(0.3, 0.3, 0.0) == 0.0

    @pytest.mark.parametrize("xi,expected", [((1.0, 0.0), (-4.0, -2.0)), ((0.0, 1.0), (-2.0, 0.0))])
    def test_circle_offsets(self, xi, expected):
        """Offsets of the unit-circle problem by hand evaluation of the limit quotient."""
        assert np.allclose(alpha_surface(circle2d(), xi), expected, atol=1e-9)

    def test_continuous_drift_has_zero_offset(self):
        problem = SdeProblem(
            name="smooth",
            dim=2,
            drift=lambda x: -x,
            diffusion=lambda x: np.broadcast_to(np.eye(2), (x.shape[0], 2, 2)),
            initial=(0.5, 0.5),
            horizon=1.0,
            surface=Sphere((0.0, 0.0), 1.0),
        )
        xi = Sphere((0.0, 0.0), 1.0).sample_points(16)
        assert np.allclose(alpha_surface(problem, xi), 0.0, atol=1e-9)

    def test_degenerate_diffusion_raises(self):
        with pytest.raises(ModelError, match="sigma"):
            alpha_surface(_degenerate_circle(), (1.0, 0.0))

    def test_missing_surface_raises(self):
        with pytest.raises(ArgumentError):
            alpha_surface(gbm1d(), 0.0)

    def test_memoized_field_matches_direct_evaluation(self):
        problem = circle2d()
        xi = problem.surface.sample_points(32, seed=3)
        field = SurfaceAlpha(problem, problem.surface, memoize=True)
        first = field(xi)
        assert np.array_equal(field(xi), first)
        assert np.allclose(first, alpha_surface(problem, xi, check=False))

    def test_point_alpha_length_must_match(self):
        with pytest.raises(ArgumentError):
            PointAlpha(PointSet1D((0.0, 1.0)), [1.0])


class TestForwardInverse:
    """Tests for G and its inverse."""

    def test_forward_example(self, unit_step):
        assert unit_step.forward(0.05)[0] == pytest.approx(0.0510546875, abs=1e-15)

    def test_inverse_example(self, unit_step):
        assert unit_step.inverse(0.0510546875)[0] == pytest.approx(0.05, abs=1e-10)

    def test_identity_outside_band(self, unit_step):
        x = np.array([[-3.0], [-0.1], [0.1], [0.25], [7.5]])
        assert np.array_equal(unit_step.forward(x), x)

    def test_fixed_on_surface(self, unit_step):
        assert unit_step.forward(0.0)[0] == 0.0

    def test_inverse_passes_far_points_through(self, unit_step):
        z, iterations = unit_step.inverse(np.array([[0.5], [-2.0]]), return_iterations=True)
        assert np.array_equal(z, [[0.5], [-2.0]])
        assert np.all(iterations == 0)

    def test_round_trip_1d(self, unit_step):
        x = np.random.default_rng(0).uniform(-0.1, 0.1, size=(100_000, 1))
        assert np.max(np.abs(unit_step.inverse(unit_step.forward(x)) - x)) <= 1e-10
        assert np.max(np.abs(unit_step.forward(unit_step.inverse(x)) - x)) <= 1e-10

    def test_round_trip_circle(self, circle_transform):
        rng = np.random.default_rng(1)
        angles = rng.uniform(0.0, 2 * np.pi, 100_000)
        radii = 1.0 + rng.uniform(-1.0, 1.0, 100_000) * circle_transform.c
        x = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        there_and_back = circle_transform.inverse(circle_transform.forward(x))
        back_and_there = circle_transform.forward(circle_transform.inverse(x))
        assert np.max(np.linalg.norm(there_and_back - x, axis=1)) <= 1e-10
        assert np.max(np.linalg.norm(back_and_there - x, axis=1)) <= 1e-10

    def test_inverse_non_convergence_raises(self, unit_step, monkeypatch):
        monkeypatch.setattr(transform_module, "MAX_INVERSE_ITERATIONS", 1)
        with pytest.raises(NumericError, match="did not converge"):
            unit_step.inverse(0.05)

    def test_identity_transform(self):
        identity = Transform.identity(gbm1d())
        assert identity.is_identity
        assert identity.forward(0.3)[0] == 0.3
        assert identity.inverse(0.3)[0] == 0.3

    def test_c_beyond_reach_rejected(self):
        surface = PointSet1D((0.0, 0.2))
        with pytest.raises(ArgumentError, match="reach"):
            Transform(surface, PointAlpha(surface, [1.0, 1.0]), 0.5)

    def test_normal_flip_invariance_1d(self):
        problem = step1d()
        original = build_transform(problem, validate=False)
        flipped = build_transform(problem, surface=problem.surface.flipped(), validate=False)
        assert flipped.alpha.values[0] == pytest.approx(-original.alpha.values[0])
        x = np.linspace(-0.2, 0.2, 1001)[:, None]
        assert np.max(np.abs(original.forward(x) - flipped.forward(x))) <= 1e-12

    def test_normal_flip_invariance_circle(self, circle_transform):
        problem = circle2d()
        flipped = build_transform(problem, surface=problem.surface.flipped(), c=circle_transform.c, validate=False)
        rng = np.random.default_rng(2)
        x = rng.uniform(-1.2, 1.2, size=(5000, 2))
        x = x[np.linalg.norm(x, axis=1) > 0.5]
        assert np.max(np.abs(circle_transform.forward(x) - flipped.forward(x))) <= 1e-12


class TestDerivatives:
    """Tests for the Jacobian and the Itô correction term."""

    def test_monotone_in_band(self, unit_step):
        x = np.linspace(-0.1, 0.1, 10_000)[:, None]
        slope = unit_step.jacobian(x, side=np.where(x[:, 0] < 0, -1.0, 1.0))
        assert np.all(slope > 0.0)

    def test_closed_forms_match_finite_differences(self, unit_step):
        x = np.concatenate([np.linspace(-0.09, -0.005, 30), np.linspace(0.005, 0.09, 30)])[:, None]
        h1, h2 = 1e-5, 1e-4
        first = (unit_step.forward(x + h1) - unit_step.forward(x - h1)) / (2 * h1)
        second = (unit_step.forward(x + h2) - 2 * unit_step.forward(x) + unit_step.forward(x - h2)) / h2 ** 2
        assert np.allclose(unit_step.jacobian(x)[:, 0, 0], first[:, 0], atol=1e-6)
        curvature = 2.0 * unit_step.hessian_apply(x, np.ones((x.shape[0], 1, 1)))
        assert np.allclose(curvature[:, 0], second[:, 0], atol=1e-4)

    def test_one_sided_slopes_at_surface(self, unit_step):
        assert unit_step.jacobian(0.0, side=1)[0, 0] == pytest.approx(1.0)
        assert unit_step.jacobian(0.0, side=-1)[0, 0] == pytest.approx(1.0)
        h = 1e-5
        g0 = unit_step.forward(0.0)[0]
        assert (unit_step.forward(h)[0] - g0) / h == pytest.approx(1.0, abs=1e-4)
        assert (g0 - unit_step.forward(-h)[0]) / h == pytest.approx(1.0, abs=1e-4)

    def test_second_derivative_jumps_across_surface(self, unit_step):
        """G'' is +2 alpha on the right of xi and -2 alpha on the left."""
        assert 2.0 * unit_step.hessian_apply(0.0, [[1.0]], side=1)[0] == pytest.approx(2.0)
        assert 2.0 * unit_step.hessian_apply(0.0, [[1.0]], side=-1)[0] == pytest.approx(-2.0)
        h = 1e-5

        def g(v):
            return unit_step.forward(v)[0]

        assert (g(2 * h) - 2 * g(h) + g(0.0)) / h ** 2 == pytest.approx(2.0, abs=1e-4)
        assert (g(0.0) - 2 * g(-h) + g(-2 * h)) / h ** 2 == pytest.approx(-2.0, abs=1e-4)

    def test_on_surface_without_side_raises(self, unit_step):
        with pytest.raises(DomainError):
            unit_step.jacobian(0.0)

    def test_identity_outside_band(self, circle_transform):
        x = np.array([[3.0, 0.0], [0.0, 0.2]])
        assert np.allclose(circle_transform.jacobian(x), np.eye(2))
        assert np.allclose(circle_transform.hessian_apply(x, np.ones((2, 2, 2))), 0.0)

    def test_jacobian_continuous_across_surface(self, circle_transform):
        xi = circle_transform.surface.sample_points(32, seed=5)
        outside = circle_transform.jacobian(xi, side=np.ones(32))
        inside = circle_transform.jacobian(xi, side=-np.ones(32))
        assert np.max(np.abs(outside - inside)) <= 1e-5


class TestTransformedCoefficients:
    """Tests for the drift and diffusion of Z = G(X)."""

    @pytest.fixture(scope="class")
    def step_transform(self):
        return build_transform(step1d())

    def test_drift_continuous_1d(self, step_transform):
        h = 1e-6
        right = step_transform.transformed_drift(step_transform.forward(h))
        left = step_transform.transformed_drift(step_transform.forward(-h))
        assert abs(right[0] - left[0]) <= 1e-3
        assert right[0] == pytest.approx(0.0, abs=1e-3)

    def test_diffusion_continuous_1d(self, step_transform):
        h = 1e-6
        right = step_transform.transformed_diffusion(step_transform.forward(h))
        left = step_transform.transformed_diffusion(step_transform.forward(-h))
        assert right[0, 0] == pytest.approx(1.0, abs=1e-5)
        assert left[0, 0] == pytest.approx(1.0, abs=1e-5)

    def test_drift_continuous_circle(self, circle_transform):
        xi = circle_transform.surface.sample_points(16, seed=4)
        normals = circle_transform.surface.unit_normal(xi)
        h = 1e-6
        outer = circle_transform.transformed_drift(circle_transform.forward(xi + h * normals))
        inner = circle_transform.transformed_drift(circle_transform.forward(xi - h * normals))
        assert np.max(np.linalg.norm(outer - inner, axis=1)) <= 1e-3

    def test_identity_region(self, circle_transform):
        problem = circle_transform.problem
        z = np.array([[2.0, 0.5], [0.1, 0.1]])
        assert np.array_equal(circle_transform.transformed_drift(z), problem.evaluate_drift(z))
        assert np.array_equal(circle_transform.transformed_diffusion(z), problem.evaluate_diffusion(z))

    def test_needs_problem(self, unit_step):
        detached = Transform(unit_step.surface, unit_step.alpha, unit_step.c)
        with pytest.raises(ModelError):
            detached.transformed_drift(0.05)

    def test_transformed_drift_is_lipschitz(self, step_transform):
        """Crossing pairs should not raise the quotient beyond the one-sided estimate."""
        box = Box((-0.3,), (0.3,), max_separation=0.05)
        surface = step_transform.surface
        one_sided = lipschitz_quotient_estimate(step_transform.transformed_drift, surface, box, 2000, 11)
        crossing = lipschitz_quotient_estimate(
            step_transform.transformed_drift, surface, box, 2000, 11, allow_crossing=True
        )
        assert np.isfinite(crossing)
        assert crossing <= 2.0 * one_sided

    def test_inverse_lipschitz_diagnostic(self, step_transform):
        estimate = step_transform.inverse_lipschitz(n_pairs=500)
        assert np.isfinite(estimate)
        assert estimate >= 1.0 - 1e-9


class TestConstruction:
    """Tests for choose_c, the certificate and build_transform."""

    def test_single_point(self):
        surface = PointSet1D((0.0,))
        assert choose_c(step1d(), PointAlpha(surface, [1.0]), surface) == pytest.approx(0.15)

    def test_gap_bounds_c(self):
        surface = PointSet1D((0.0, 0.2))
        assert choose_c(step1d(), PointAlpha(surface, [1.0, -1.0]), surface) == pytest.approx(0.09)

    def test_zero_offset_uses_reach(self):
        surface = PointSet1D((-1.0, 1.0))
        assert choose_c(step1d(), PointAlpha(surface, [0.0, 0.0]), surface) == pytest.approx(0.9)

    def test_zero_offset_unbounded_reach(self):
        surface = PointSet1D((0.0,))
        assert choose_c(step1d(), PointAlpha(surface, [0.0]), surface) == transform_module.UNBOUNDED_C

    def test_circle_certificate(self, circle_transform):
        assert 0.0 < circle_transform.c <= 0.9
        assert circle_transform.certificate <= 0.5
        assert contraction_certificate(circle_transform, seed=99) <= 0.5

    def test_failing_certificate_raises(self, monkeypatch):
        problem = circle2d()
        monkeypatch.setattr(transform_module, "contraction_certificate", lambda *args, **kwargs: 1.0)
        with pytest.raises(ConstructionError, match="halvings"):
            choose_c(problem, SurfaceAlpha(problem, problem.surface), problem.surface)

    def test_lipschitz_problem_gets_identity(self):
        assert build_transform(gbm1d()).is_identity

    def test_step_problem(self):
        transform = build_transform(step1d())
        assert transform.c == pytest.approx(0.15)
        assert transform.alpha.values[0] == pytest.approx(1.0)
        summary = transform.summary()
        assert summary["surface"] == "pointset1d(0)"
        assert summary["c"] == pytest.approx(0.15)

    def test_continuous_hyperplane_problem_is_near_identity(self):
        problem = SdeProblem(
            name="plane",
            dim=2,
            drift=lambda x: np.column_stack([np.ones(x.shape[0]), np.sin(x[:, 1])]),
            diffusion=lambda x: np.broadcast_to(np.eye(2), (x.shape[0], 2, 2)),
            initial=(0.5, 0.5),
            horizon=1.0,
            surface=Hyperplane((1.0, 0.0), 0.0),
        )
        transform = build_transform(problem)
        assert transform.c == transform_module.UNBOUNDED_C
        x = np.random.default_rng(6).uniform(-1.0, 1.0, size=(100, 2))
        assert np.array_equal(transform.forward(x), x)

    def test_validate_assumptions_circle(self):
        problem = circle2d()
        report = validate_assumptions(problem, problem.surface, 0.1)
        assert report.min_nondegeneracy == pytest.approx(0.25)
        assert np.isfinite(report.alpha_tangent_slope)
        assert set(report.to_dict()) == {"min_nondegeneracy", "sup_drift", "sup_diffusion", "alpha_tangent_slope"}

    def test_validate_assumptions_degenerate(self):
        problem = _degenerate_circle()
        with pytest.raises(ModelError):
            validate_assumptions(problem, problem.surface, 0.1)
