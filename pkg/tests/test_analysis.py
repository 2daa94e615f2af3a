"""Tests for the Monte Carlo estimators and the order regression."""

import logging

import numpy as np
import pytest

from pwsde.analysis import (
    MomentAccumulator,
    error_decomposition,
    excursion_probability,
    excursion_report,
    fit_order,
    levels_for,
    occupation_time,
    path_batches,
    step_count_for,
    strong_error,
)
from pwsde.errors import ArgumentError
from pwsde.geometry import Hyperplane, PointSet1D
from pwsde.models.problem import SdeProblem
from pwsde.models.registry import circle2d, gbm1d, step1d
from pwsde.models.reports import ConvergenceReport, ConvergenceRow
from pwsde.transform import build_transform


def _still_problem(initial, surface, drift=0.0):
    """Problem with constant drift and no noise."""
    return SdeProblem(
        name="still",
        dim=1,
        drift=lambda x: np.full_like(x, drift),
        diffusion=lambda x: np.zeros((x.shape[0], 1, 1)),
        initial=(initial,),
        horizon=1.0,
        surface=surface,
    )


@pytest.fixture(scope="module")
def circle():
    """Fixture providing the unit-circle problem with its transform."""
    problem = circle2d()
    return problem, build_transform(problem)


class TestHelpers:
    """Tests for accumulators, batching and step bookkeeping."""

    def test_moments(self):
        acc = MomentAccumulator().add([1.0, 2.0, 3.0])
        assert acc.mean == pytest.approx(2.0)
        assert acc.variance == pytest.approx(1.0)
        assert acc.count == 3

    def test_merge_matches_single_pass(self):
        merged = MomentAccumulator().add([1.0, 5.0]).merge(MomentAccumulator().add([2.0, 8.0, 4.0]))
        single = MomentAccumulator().add([1.0, 5.0, 2.0, 8.0, 4.0])
        assert merged.mean == pytest.approx(single.mean)
        assert merged.variance == pytest.approx(single.variance)

    def test_empty_accumulator(self):
        assert MomentAccumulator().mean == 0.0
        assert MomentAccumulator().add([4.0]).variance == 0.0

    def test_path_batches(self):
        assert path_batches(5, 2) == [(0, 1), (2, 3), (4,)]
        assert path_batches(3) == [(0, 1, 2)]

    @pytest.mark.parametrize("n_paths,batch", [(0, 2), (5, 0)])
    def test_invalid_batches(self, n_paths, batch):
        with pytest.raises(ArgumentError):
            path_batches(n_paths, batch)

    def test_step_count_for(self):
        assert step_count_for(gbm1d(), 2.0 ** -4) == 16
        with pytest.raises(ArgumentError):
            step_count_for(gbm1d(), 0.3)

    def test_levels_for(self):
        assert levels_for(1024) == 10
        with pytest.raises(ArgumentError):
            levels_for(12)


class TestFitOrder:
    """Tests for the log-log regression."""

    def test_exact_half_order(self):
        slope, intercept = fit_order([(2.0 ** -4, 2.0 ** -2), (2.0 ** -6, 2.0 ** -3), (2.0 ** -8, 2.0 ** -4)])
        assert slope == pytest.approx(0.5)
        assert intercept == pytest.approx(0.0, abs=1e-12)

    def test_constant_errors(self):
        slope, _ = fit_order([(2.0 ** -4, 0.1), (2.0 ** -6, 0.1), (2.0 ** -8, 0.1)])
        assert slope == pytest.approx(0.0, abs=1e-12)

    def test_first_order(self):
        slope, _ = fit_order([(2.0 ** -4, 2.0 ** -4), (2.0 ** -6, 2.0 ** -6), (2.0 ** -8, 2.0 ** -8)])
        assert slope == pytest.approx(1.0)

    def test_accepts_report(self):
        report = ConvergenceReport(
            problem="p",
            scheme="gm",
            reference="gm",
            reference_delta=2.0 ** -10,
            rows=[ConvergenceRow(2.0 ** -k, 2.0 ** (-k / 2), 10, 0.0) for k in (2, 4, 6)],
        )
        assert fit_order(report)[0] == pytest.approx(0.5)

    def test_zero_rows_are_excluded_with_warning(self, caplog):
        pairs = [(2.0 ** -2, 0.0), (2.0 ** -4, 2.0 ** -2), (2.0 ** -6, 2.0 ** -3), (2.0 ** -8, 2.0 ** -4)]
        with caplog.at_level(logging.WARNING):
            slope, _ = fit_order(pairs)
        assert slope == pytest.approx(0.5)
        assert "non-positive error" in caplog.text

    def test_too_few_rows(self):
        with pytest.raises(ArgumentError, match="at least 3"):
            fit_order([(2.0 ** -4, 2.0 ** -4), (2.0 ** -6, 2.0 ** -6)])


class TestStrongError:
    """Tests for the coupled strong-error estimator."""

    def test_reference_step_has_zero_error(self, circle):
        problem, transform = circle
        report = strong_error(problem, "gm", [2.0 ** -6], 6, 0, 6, transform=transform)
        assert report.rows[0].error == 0.0
        assert report.rows[0].ci_half_width == 0.0
        assert report.fitted_order is None

    def test_rows_sorted_by_decreasing_delta(self):
        report = strong_error(gbm1d(), "em", [2.0 ** -6, 2.0 ** -3, 2.0 ** -5, 2.0 ** -4], 16, 1, 8)
        assert [row.delta for row in report.rows] == [2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6]
        assert report.reference_delta == 2.0 ** -8
        assert all(row.n_paths == 16 for row in report.rows)
        assert report.fitted_order is not None

    def test_non_nested_delta_raises(self):
        with pytest.raises(ArgumentError, match="nested"):
            strong_error(gbm1d(), "em", [1.0 / 3.0], 4, 0, 8)

    def test_exact_reference_needs_solution(self):
        with pytest.raises(ArgumentError, match="exact"):
            strong_error(step1d(), "em", [2.0 ** -4], 4, 0, 8, reference="exact")

    def test_unknown_reference(self):
        with pytest.raises(ArgumentError):
            strong_error(gbm1d(), "em", [2.0 ** -4], 4, 0, 8, reference="analytic")

    def test_shallow_reference_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            strong_error(gbm1d(), "em", [2.0 ** -3, 2.0 ** -4], 4, 0, 5)
        assert "finer than the smallest" in caplog.text

    def test_gbm_order_against_exact_solution(self):
        deltas = [2.0 ** -k for k in range(4, 9)]
        exact = strong_error(gbm1d(), "em", deltas, 256, 3, 12, reference="exact")
        coupled = strong_error(gbm1d(), "em", deltas, 256, 3, 12, reference="gm")
        assert 0.45 <= exact.fitted_order <= 0.85
        assert abs(exact.fitted_order - coupled.fitted_order) < 0.1

    def test_workers_do_not_change_estimates(self):
        deltas = [2.0 ** -3, 2.0 ** -4, 2.0 ** -5]
        serial = strong_error(gbm1d(), "em", deltas, 12, 5, 7, batch_size=4, workers=1)
        threaded = strong_error(gbm1d(), "em", deltas, 12, 5, 7, batch_size=4, workers=3)
        assert [row.error for row in serial.rows] == [row.error for row in threaded.rows]

    def test_batch_size_does_not_change_estimates(self):
        deltas = [2.0 ** -3, 2.0 ** -4, 2.0 ** -5]
        small = strong_error(gbm1d(), "em", deltas, 12, 5, 7, batch_size=5)
        large = strong_error(gbm1d(), "em", deltas, 12, 5, 7, batch_size=12)
        for a, b in zip(small.rows, large.rows):
            assert a.error == pytest.approx(b.error, rel=1e-12)


class TestOccupationTime:
    """Tests for the band occupation estimator."""

    def test_far_path_never_occupies(self):
        report = occupation_time(_still_problem(5.0, PointSet1D((0.0,))), 2.0 ** -4, [0.5], 4, 0)
        assert report.rows[0].occupation == 0.0

    def test_path_always_inside_band(self):
        problem = _still_problem(0.5, PointSet1D((-1.0, 1.0)))
        report = occupation_time(problem, 2.0 ** -4, [1.0], 4, 0)
        assert report.rows[0].occupation == pytest.approx(problem.horizon)

    def test_width_beyond_reach_raises(self):
        with pytest.raises(ArgumentError, match="reach"):
            occupation_time(_still_problem(0.5, PointSet1D((-1.0, 1.0))), 2.0 ** -4, [2.0], 4, 0)

    def test_requires_surface(self):
        with pytest.raises(ArgumentError, match="exceptional set"):
            occupation_time(gbm1d(), 2.0 ** -4, [0.1], 4, 0)

    def test_monotone_in_width(self):
        report = occupation_time(circle2d(), 2.0 ** -8, [0.08, 0.02, 0.04], 64, 1, batch_size=16)
        assert [row.eps for row in report.rows] == [0.02, 0.04, 0.08]
        occupations = [row.occupation for row in report.rows]
        assert occupations == sorted(occupations)
        assert 0.0 < occupations[0] and occupations[-1] <= 1.0
        assert len(report.ratios) == 2


class TestExcursion:
    """Tests for the within-step excursion estimator."""

    def test_deterministic_moves_below_threshold(self):
        problem = _still_problem(0.3, PointSet1D((0.0,)), drift=1.0)
        assert excursion_probability(problem, 2.0 ** -4, 0.1, 8, 0) == 0.0
        assert excursion_probability(problem, 2.0 ** -4, 0.05, 8, 0) == 1.0

    def test_tiny_threshold_is_always_exceeded(self):
        assert excursion_probability(circle2d(), 2.0 ** -6, 1e-9, 16, 0) == 1.0

    def test_non_increasing_in_threshold(self):
        report = excursion_report(circle2d(), 2.0 ** -8, [0.5, 0.005, 0.02, 0.01], 32, 2)
        probabilities = [row.probability for row in report.rows]
        assert [row.eps for row in report.rows] == [0.005, 0.01, 0.02, 0.5]
        assert probabilities == sorted(probabilities, reverse=True)
        assert probabilities[0] > probabilities[-1]

    @pytest.mark.parametrize("eps", [0.0, -0.1])
    def test_non_positive_threshold_raises(self, eps):
        with pytest.raises(ArgumentError):
            excursion_probability(circle2d(), 2.0 ** -4, eps, 4, 0)


class TestErrorDecomposition:
    """Tests for the two-term error split."""

    def test_lipschitz_problem_has_no_mismatch(self):
        report = error_decomposition(gbm1d(), [2.0 ** -3, 2.0 ** -5], 16, 0, 7)
        assert [row.mismatch for row in report.rows] == [0.0, 0.0]
        assert all(row.transformed_error > 0 for row in report.rows)
        assert report.reference_delta == 2.0 ** -7

    def test_circle_terms_are_finite(self, circle):
        problem, transform = circle
        report = error_decomposition(problem, [2.0 ** -3, 2.0 ** -4], 8, 0, 6, transform=transform)
        for row in report.rows:
            assert np.isfinite(row.transformed_error) and np.isfinite(row.mismatch)
            assert row.n_paths == 8


@pytest.mark.slow
class TestAcceptance:
    """Desk-scale experiments; run with ``pytest -m slow``."""

    def test_circle_gm_order(self, circle):
        problem, transform = circle
        deltas = [2.0 ** -k for k in range(6, 13)]
        report = strong_error(problem, "gm", deltas, 1000, 0, 16, transform=transform, batch_size=250)
        assert 0.4 <= report.fitted_order <= 0.6

    def test_circle_em_order(self, circle):
        problem, transform = circle
        deltas = [2.0 ** -k for k in range(6, 13)]
        report = strong_error(problem, "em", deltas, 1000, 0, 16, transform=transform, batch_size=250)
        assert report.fitted_order >= 0.25

    def test_gbm_order(self):
        deltas = [2.0 ** -k for k in range(6, 13)]
        report = strong_error(gbm1d(), "em", deltas, 1000, 0, 16, reference="exact")
        assert 0.4 <= report.fitted_order <= 0.6

    def test_occupation_scales_linearly(self):
        report = occupation_time(circle2d(), 2.0 ** -10, [0.02, 0.04, 0.08], 2000, 0)
        assert all(1.4 <= ratio <= 2.8 for ratio in report.ratios)

    def test_circle_gm_order_independent_of_reference_level(self, circle):
        problem, transform = circle
        deltas = [2.0 ** -k for k in range(6, 12)]
        shallow = strong_error(problem, "gm", deltas, 1000, 0, 14, transform=transform, batch_size=250)
        deep = strong_error(problem, "gm", deltas, 1000, 0, 16, transform=transform, batch_size=250)
        assert abs(shallow.fitted_order - deep.fitted_order) < 0.1

    def test_doubling_paths_stays_within_confidence(self, circle):
        problem, transform = circle
        deltas = [2.0 ** -k for k in range(6, 10)]
        half = strong_error(problem, "gm", deltas, 500, 0, 12, transform=transform, batch_size=250)
        full = strong_error(problem, "gm", deltas, 1000, 0, 12, transform=transform, batch_size=250)
        for small, large in zip(half.rows, full.rows):
            assert abs(large.error - small.error) < 3.0 * small.ci_half_width

    def test_gm_with_zero_offset_has_half_order(self):
        """Continuous drift gives alpha = 0, so GM is plain Euler on a Lipschitz problem."""
        problem = SdeProblem(
            name="lipschitz2d",
            dim=2,
            drift=lambda x: np.column_stack([np.ones(x.shape[0]), np.sin(x[:, 1])]),
            diffusion=lambda x: np.stack(
                [
                    np.column_stack([np.ones(x.shape[0]), np.zeros(x.shape[0])]),
                    np.column_stack([np.zeros(x.shape[0]), 0.5 * x[:, 1]]),
                ],
                axis=1,
            ),
            initial=(0.2, 0.5),
            horizon=1.0,
            surface=Hyperplane((1.0, 0.0), 0.0),
        )
        transform = build_transform(problem)
        assert np.array_equal(transform.forward(problem.initial), problem.initial)

        deltas = [2.0 ** -k for k in range(5, 11)]
        report = strong_error(problem, "gm", deltas, 1000, 0, 14, transform=transform, batch_size=250)
        assert 0.4 <= report.fitted_order <= 0.6
