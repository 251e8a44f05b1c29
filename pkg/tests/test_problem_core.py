"""
Tests for sets, scenario models, scenario maps and the ProblemService.

Run with: python -m pytest tests/
"""

from dataclasses import replace

import numpy as np
import pytest

from svicert.models import (
    AveragedMap,
    DimensionError,
    GroundSet,
    IntervalValuedMap,
    LcpInstance,
    ModelValidationError,
    MovingSet,
    MultiValuedMapError,
    PiecewiseLinear,
    ProblemInstance,
    RandomAffineMap,
    ScenarioModel,
    SmoothMap,
    SmoothTerm,
)
from svicert.services.lcp_service import LcpService
from svicert.services.problem_service import ProblemService

from conftest import example1_problem


class TestGroundSet:
    """Projection and membership for every set variant."""

    def test_orthant_projection(self):
        np.testing.assert_array_equal(GroundSet.orthant(2).project([-1.0, 3.0]), [0.0, 3.0])

    def test_box_projection(self):
        box = GroundSet.box([0.0, 0.0], [1.0, 1.0])
        np.testing.assert_array_equal(box.project([2.0, -2.0]), [1.0, 0.0])

    def test_cartesian_projection(self):
        product = GroundSet.cartesian([GroundSet.orthant(1), GroundSet.box([-1.0], [1.0])])
        np.testing.assert_array_equal(product.project([-5.0, 5.0]), [0.0, 1.0])
        assert product.block_slices() == (slice(0, 1), slice(1, 2))

    def test_mixed_partition_masks(self):
        mixed = GroundSet.mixed(2, 1)
        np.testing.assert_array_equal(mixed.nonneg_mask(), [True, True, False])
        np.testing.assert_array_equal(mixed.free_mask(), [False, False, True])
        np.testing.assert_array_equal(mixed.project([-1.0, 2.0, -7.0]), [0.0, 2.0, -7.0])

    def test_box_rejects_crossed_bounds(self):
        with pytest.raises(ModelValidationError):
            GroundSet.box([1.0], [0.0])

    def test_box_with_infinite_sides(self):
        box = GroundSet.box([-np.inf, 0.0], [1.0, np.inf])
        np.testing.assert_array_equal(box.project([5.0, -5.0]), [1.0, 0.0])
        assert not box.is_bounded

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            GroundSet.orthant(2).project([1.0, 2.0, 3.0])

    def test_projection_idempotent_and_nonexpansive(self):
        rng = np.random.default_rng(1)
        sets = [
            GroundSet.orthant(4),
            GroundSet.box([-1.0, 0.0, -np.inf, 2.0], [1.0, 3.0, 0.0, np.inf]),
            GroundSet.cartesian([GroundSet.orthant(2), GroundSet.box([-1.0, -1.0], [1.0, 1.0])]),
        ]
        for _ in range(10000):
            ground_set = sets[rng.integers(len(sets))]
            x, y = rng.normal(0.0, 5.0, (2, 4))
            px, py = ground_set.project(x), ground_set.project(y)
            np.testing.assert_array_equal(ground_set.project(px), px)
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12


class TestScenarioModel:
    """Validation and reproducible sampling."""

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ModelValidationError):
            ScenarioModel.finite([[0.0], [1.0]], [0.5, 0.6])

    def test_negative_probability(self):
        with pytest.raises(ModelValidationError):
            ScenarioModel.finite([[0.0], [1.0]], [-0.5, 1.5])

    def test_same_seed_same_draws(self):
        model = ScenarioModel.finite([[1.0, 1.0], [-1.0, -1.0]], [0.5, 0.5])
        first = ProblemService.sample_scenarios(model, 4, seed=7)
        second = ProblemService.sample_scenarios(model, 4, seed=7)
        np.testing.assert_array_equal(first, second)

    def test_two_point_frequency(self):
        model = ScenarioModel.finite([[1.0, 1.0], [-1.0, -1.0]], [0.5, 0.5])
        draws = ProblemService.sample_scenarios(model, 100000, seed=11)
        frequency = np.mean(draws[:, 0] == 1.0)
        assert abs(frequency - 0.5) <= 0.01

    def test_sampler_reproducible(self):
        model = ScenarioModel.sampler([("uniform", -1.0, 1.0), ("normal", 2.0, 0.5)], seed=3)
        np.testing.assert_array_equal(ProblemService.sample_scenarios(model, 50, 3),
                                      ProblemService.sample_scenarios(model, 50, 3))
        np.testing.assert_allclose(model.mean(), [0.0, 2.0])

    def test_sampler_seed_selects_stream(self):
        distributions = [("uniform", -1.0, 1.0), ("normal", 2.0, 0.5)]
        first = ScenarioModel.sampler(distributions, seed=3)
        second = ScenarioModel.sampler(distributions, seed=4)
        draws = ProblemService.sample_scenarios(first, 50, seed=3)
        assert not np.allclose(draws, ProblemService.sample_scenarios(second, 50, seed=3))
        np.testing.assert_array_equal(
            draws, ProblemService.sample_scenarios(ScenarioModel.sampler(distributions, seed=3), 50, seed=3))

    def test_finite_model_ignores_sampler_seed(self):
        model = ScenarioModel.finite([[1.0], [-1.0]], [0.5, 0.5])
        np.testing.assert_array_equal(ProblemService.scenario_rng(model, 5, "sa").random(4),
                                      ProblemService.scenario_rng(replace(model, seed=9), 5, "sa").random(4))

    def test_sampler_rejects_unknown_family(self):
        with pytest.raises(ModelValidationError):
            ScenarioModel.sampler([("cauchy", 0.0, 1.0)], seed=1)


class TestScenarioMaps:
    """Map evaluation, selections and expectations."""

    def setup_method(self):
        self.problem = example1_problem()

    def test_eval_map_example1(self):
        np.testing.assert_array_equal(ProblemService.eval_map(self.problem, [0.0, 2.0], [1.0, 1.0]), [1.0, 1.0])
        np.testing.assert_array_equal(ProblemService.eval_map(self.problem, [0.0, 0.0], [0.0, 0.0]), [-2.0, -4.0])

    def test_eval_map_random_affine_by_hand(self):
        M_omega = np.array([[[1.0, 0.0], [0.0, 0.0]]])
        mapping = RandomAffineMap(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([1.0, -1.0]),
                                  matrix_omega=M_omega, offset_omega=np.array([[2.0, 5.0]]))
        value = mapping.evaluate(np.array([1.0, 1.0]), np.array([0.5]))
        # M(ω) = [[1.5, 2], [3, 4]], q(ω) = (2, 1.5)
        np.testing.assert_allclose(value, [1.5 + 2.0 + 2.0, 7.0 + 1.5])

    def test_eval_map_is_pure(self):
        x, omega = np.array([0.3, 1.7]), np.array([1.0, 1.0])
        first = ProblemService.eval_map(self.problem, x, omega)
        second = ProblemService.eval_map(self.problem, x, omega)
        assert first.tobytes() == second.tobytes()

    def test_expected_map_exact(self):
        estimate = ProblemService.expected_map(self.problem, [0.0, 2.0])
        np.testing.assert_array_equal(estimate.value, [0.0, 0.0])
        assert estimate.mode == "exact"
        np.testing.assert_array_equal(ProblemService.expected_map(self.problem, [0.0, 0.0]).value, [-2.0, -4.0])

    def test_expected_map_montecarlo_within_stderr(self):
        scenarios = ScenarioModel.sampler([("uniform", 0.0, 2.0), ("uniform", -1.0, 1.0)], seed=5)
        problem = self.problem.with_scenarios(scenarios)
        estimate = ProblemService.expected_map(problem, [1.0, 1.0], "montecarlo", samples=100000, seed=5)
        exact = np.array([3.0, 3.0]) + np.array([-2.0, -4.0]) + np.array([1.0, 0.0])
        assert np.all(np.abs(estimate.value - exact) <= 4 * estimate.stderr)

    def test_exact_on_sampler_rejected(self):
        problem = self.problem.with_scenarios(ScenarioModel.sampler([("normal", 0.0, 1.0)] * 2, seed=1))
        with pytest.raises(ValueError):
            ProblemService.expected_map(problem, [0.0, 0.0], "exact")

    def test_interval_map_selection(self):
        low = RandomAffineMap(np.zeros((1, 1)), np.array([-3.0]))
        high = RandomAffineMap(np.zeros((1, 1)), np.array([-1.0]))
        interval = IntervalValuedMap(low, high)
        np.testing.assert_array_equal(ProblemService.eval_selection(interval, [0.0], [0.0], "lower"), [-3.0])
        np.testing.assert_array_equal(ProblemService.eval_selection(interval, [0.0], [0.0], ["upper"]), [-1.0])
        problem = ProblemInstance("SVI", GroundSet.orthant(1), interval, ScenarioModel.single([0.0]))
        with pytest.raises(MultiValuedMapError):
            ProblemService.eval_map(problem, [0.0], [0.0])

    def test_averaged_map_matches_loop(self):
        averaged = AveragedMap(self.problem.map, self.problem.scenario_model.outcomes,
                               self.problem.scenario_model.probabilities)
        assert averaged.is_affine
        x = np.array([0.7, -0.2])
        manual = 0.5 * self.problem.map.evaluate(x, [1.0, 1.0]) + 0.5 * self.problem.map.evaluate(x, [-1.0, -1.0])
        np.testing.assert_allclose(averaged(x), manual, atol=1e-12)
        np.testing.assert_allclose(averaged.regularized(0.5)(x), manual + 0.5 * x, atol=1e-12)


class TestPiecewiseAndSmooth:
    """Piecewise-linear factors and the smooth term grammar."""

    def setup_method(self):
        self.factor = PiecewiseLinear(weights=np.ones(2), breakpoints=np.array([1.0, 3.0]),
                                      intercept=np.array([10.0, 1.0]),
                                      slopes=np.array([[-1.0, 0.0], [-2.0, 0.5], [-4.0, 0.0]]))

    def test_continuity_at_breakpoints(self):
        for omega in (np.array([-1.0]), np.array([0.0]), np.array([2.0])):
            for beta in self.factor.breakpoints:
                left = self.factor.value(beta - 1e-10, omega)
                right = self.factor.value(beta + 1e-10, omega)
                assert abs(left - right) <= 1e-8

    def test_kink_slope_interval(self):
        lower, upper, right = self.factor.slope(1.0, [0.0])
        assert (lower, upper, right) == (-2.0, -1.0, -2.0)
        lower, upper, _ = self.factor.slope(2.0, [0.0])
        assert lower == upper == -2.0

    def test_smoothing_is_c1_at_window_edges(self):
        smooth = self.factor.with_smoothing(0.25)
        omega = [0.0]
        for edge in (0.75, 1.25):
            assert abs(smooth.value(edge, omega) - self.factor.value(edge, omega)) <= 1e-12
            assert abs(smooth.slope(edge - 1e-9, omega)[2] - smooth.slope(edge + 1e-9, omega)[2]) <= 1e-6

    def test_smoothing_windows_must_not_overlap(self):
        with pytest.raises(ModelValidationError):
            self.factor.with_smoothing(1.0)

    def test_smooth_map_jacobian_matches_finite_differences(self):
        smooth = self.factor.with_smoothing(0.25)
        mapping = SmoothMap(2, (
            (SmoothTerm(coef=2.0, powers=((0, 2),)), SmoothTerm(coef=-1.0, factor=smooth)),
            (SmoothTerm(coef=1.0, coef_omega=np.array([0.5]), powers=((0, 1), (1, 1))),
             SmoothTerm(coef=-1.0, powers=((1, 1),), factor=smooth, factor_mode="slope")),
        ))
        x, omega = np.array([0.6, 0.5]), np.array([0.3])
        jac = mapping.jacobian(x, omega)
        h = 1e-6
        for j in range(2):
            step = np.zeros(2)
            step[j] = h
            fd = (mapping.evaluate(x + step, omega) - mapping.evaluate(x - step, omega)) / (2 * h)
            np.testing.assert_allclose(jac[:, j], fd, rtol=1e-5, atol=1e-6)


class TestMovingSet:
    """Moving sets K(x) for SQVI problems."""

    def test_translated_box(self):
        base = GroundSet.box([0.0, 0.0], [1.0, 1.0])
        moving = MovingSet.translated(base, 0.5 * np.eye(2))
        image = moving.at(np.array([2.0, 0.0]))
        np.testing.assert_array_equal(image.lower, [1.0, 0.0])
        np.testing.assert_array_equal(image.upper, [2.0, 1.0])
        assert moving.is_contractive()
        assert moving.contains(np.array([1.5, 0.5]))

    def test_sqvi_requires_moving_set(self):
        mapping = RandomAffineMap(np.eye(2), np.zeros(2))
        with pytest.raises(ModelValidationError):
            ProblemInstance("SQVI", GroundSet.orthant(2), mapping, ScenarioModel.single([0.0]))

    def test_scp_requires_cone(self):
        mapping = RandomAffineMap(np.eye(1), np.zeros(1))
        with pytest.raises(ModelValidationError):
            ProblemInstance("SCP", GroundSet.box([0.0], [1.0]), mapping, ScenarioModel.single([0.0]))


class TestResiduals:
    """Natural and Fischer-Burmeister residuals."""

    def test_natural_residual_example1(self):
        problem = example1_problem()
        Fx = ProblemService.expected_map(problem, [0.0, 2.0]).value
        assert ProblemService.natural_residual(problem, [0.0, 2.0], Fx) == 0.0
        assert ProblemService.natural_residual(problem, [0.0, 0.0], [-2.0, -4.0]) == pytest.approx(np.sqrt(20.0))

    def test_fb_residual_examples(self):
        np.testing.assert_array_equal(ProblemService.fb_residual([0.0], [1.0]), [0.0])
        np.testing.assert_array_equal(ProblemService.fb_residual([3.0], [0.0]), [0.0])
        np.testing.assert_allclose(ProblemService.fb_residual([0.0, 2.0], [-1.0, -1.0]), [2.0, np.sqrt(5.0) - 1.0])

    def test_fb_zero_iff_complementary(self):
        rng = np.random.default_rng(2)
        for _ in range(2000):
            a, b = rng.normal(size=2)
            pattern = rng.integers(4)
            if pattern == 0:
                a = 0.0
            elif pattern == 1:
                b = 0.0
            complementary = a >= 0 and b >= 0 and a * b == 0
            value = ProblemService.fb_residual([a], [b])[0]
            assert (abs(value) <= 1e-12) == complementary

    def test_natural_residual_zero_at_oracle_solutions(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(1, 7))
            lcp = LcpInstance(rng.normal(size=(n, n)), rng.normal(size=n))
            enumeration = LcpService.enumerate_lcp_solutions(lcp)
            for x in enumeration.solutions:
                residual = ProblemService.natural_residual(GroundSet.orthant(n), x, lcp.slack(x))
                assert residual <= 1e-7

    def test_interval_residual_best_selection(self):
        ground_set = GroundSet.orthant(1)
        # 0 ∈ [-1, 2] at an interior point: the best selection has zero residual
        assert ProblemService.interval_natural_residual(ground_set, [1.0], [-1.0], [2.0]) == 0.0
        assert ProblemService.interval_natural_residual(ground_set, [1.0], [0.5], [2.0]) == pytest.approx(0.5)
