"""
Tests for the solver service.

Run with: python -m pytest tests/
"""

import numpy as np
import pytest

from conftest import affine_problem, example1_problem
from svicert.models import (
    GroundSet,
    LcpInstance,
    ModelValidationError,
    MovingSet,
    MultiValuedMapError,
    ProblemInstance,
    RandomAffineMap,
    ScenarioModel,
    SolverConfig,
    SolveStatus,
)
from svicert.services.cournot_service import CournotService
from svicert.services.lcp_service import LcpService
from svicert.services.problem_service import ProblemService
from svicert.services.solver_service import SolverService

M = np.array([[2.0, 1.0], [1.0, 2.0]])
Q = np.array([-2.0, -4.0])


def fb(a, b):
    return np.sqrt(a ** 2 + b ** 2) - a - b


def example1_erm_grid(x1_values, x2_values) -> float:
    """Minimum of the two-scenario ERM objective over a rectangular grid."""
    x2 = np.asarray(x2_values)
    best = np.inf
    for x1 in x1_values:
        total = np.zeros_like(x2)
        for shift in (1.0, -1.0):
            F1 = M[0, 0] * x1 + M[0, 1] * x2 + Q[0] + shift
            F2 = M[1, 0] * x1 + M[1, 1] * x2 + Q[1] + shift
            total += 0.5 * np.hypot(fb(x1, F1), fb(x2, F2))
        best = min(best, float(total.min()))
    return best


class TestSaa:
    """Sample-average approximation."""

    def test_example1_exact_weights(self, example1):
        result = SolverService.saa_solve(example1)
        assert result.status == SolveStatus.CONVERGED
        np.testing.assert_allclose(result.x, [0.0, 2.0], atol=1e-8)
        assert result.details["mode"] == "exact"
        assert result.details["inner_method"] == "ssn"

    def test_example1_as_svi_uses_extragradient(self, example1_svi):
        result = SolverService.saa_solve(example1_svi)
        assert result.converged
        assert result.details["inner_method"] == "extragradient"
        np.testing.assert_allclose(result.x, [0.0, 2.0], atol=1e-7)

    def test_montecarlo_samples(self):
        base = example1_problem()
        problem = ProblemInstance("SCP", base.ground_set, base.map,
                                  ScenarioModel.sampler([("uniform", -1.0, 1.0), ("uniform", -1.0, 1.0)], seed=3))
        result = SolverService.saa_solve(problem, SolverConfig(samples=2000, seed=11))
        assert result.details["mode"] == "montecarlo"
        assert len(result.details["stderr"]) == 2
        np.testing.assert_allclose(result.x, [0.0, 2.0], atol=0.1)

    def test_same_seed_same_answer(self):
        problem = example1_problem()
        first = SolverService.saa_solve(problem, SolverConfig(samples=50, seed=5))
        second = SolverService.saa_solve(problem, SolverConfig(samples=50, seed=5))
        np.testing.assert_array_equal(first.x, second.x)

    def test_interval_map_is_rejected(self, cournot_config):
        exact, _ = CournotService.build_cournot(cournot_config)
        with pytest.raises(MultiValuedMapError):
            SolverService.saa_solve(exact)

    def test_matches_oracle_on_random_strongly_monotone_problems(self):
        rng = np.random.default_rng(20130917)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            k = int(rng.integers(1, 6))
            A = rng.normal(size=(k, n, n))
            # PSD plus skew per scenario; the identity base makes the mean strongly monotone
            matrices = A @ A.transpose(0, 2, 1) / n + (A - A.transpose(0, 2, 1))
            offsets = rng.normal(size=(k, n))
            base = 2.0 * rng.normal(size=n)
            probabilities = rng.dirichlet(np.ones(k))
            mapping = RandomAffineMap(np.eye(n), base, matrix_omega=matrices, offset_omega=offsets)
            problem = ProblemInstance("SCP", GroundSet.orthant(n), mapping,
                                      ScenarioModel.finite(np.eye(k), probabilities))

            result = SolverService.saa_solve(problem)
            mean_M = np.eye(n) + np.tensordot(probabilities, matrices, axes=1)
            mean_q = base + probabilities @ offsets
            oracle = LcpService.enumerate_lcp_solutions(LcpInstance(mean_M, mean_q))
            assert result.converged
            assert oracle.solutions
            for solution in oracle.solutions:
                np.testing.assert_allclose(result.x, solution, atol=1e-6)


class TestStochasticApproximation:
    """Projected SA with θ/k steps."""

    def test_deterministic_for_fixed_seed(self, example1):
        config = SolverConfig(max_iter=2000, seed=7, tol=1e-4)
        first = SolverService.sa_solve(example1, config)
        second = SolverService.sa_solve(example1, config)
        np.testing.assert_array_equal(first.x, second.x)
        assert first.trace == second.trace

    def test_tail_average_approaches_solution(self, example1):
        result = SolverService.sa_solve(example1, SolverConfig(max_iter=100000, seed=1, tol=1e-4))
        assert np.linalg.norm(result.x - np.array([0.0, 2.0])) < 1e-2
        assert result.details["tail_iterates"] == 50000
        assert np.all(result.x >= 0)

    def test_two_seeds_reach_the_same_limit(self, example1):
        first = SolverService.sa_solve(example1, SolverConfig(max_iter=100000, seed=1, tol=1e-4))
        second = SolverService.sa_solve(example1, SolverConfig(max_iter=100000, seed=2, tol=1e-4))
        assert not np.array_equal(first.x, second.x)
        assert np.linalg.norm(first.x - second.x) < 2e-2

    def test_zero_noise_matches_extragradient(self):
        problem = affine_problem(M, Q, scenarios=ScenarioModel.single([0.0]))
        sa = SolverService.sa_solve(problem, SolverConfig(max_iter=100000, tol=1e-4))
        averaged, _ = ProblemService.freeze_average(problem)
        extragradient = SolverService.extragradient_solve(problem.ground_set, averaged, np.zeros(2))
        assert extragradient.converged
        np.testing.assert_allclose(sa.x, extragradient.x, atol=1e-3)

    def test_last_iterate_when_not_averaging(self, example1):
        result = SolverService.sa_solve(example1, SolverConfig(max_iter=100, averaging=False, tol=1e-4))
        assert result.details["averaging"] is False
        assert result.iterations == 100

    def test_divergence_is_reported(self):
        problem = affine_problem(-np.eye(2), [0.0, 0.0])
        result = SolverService.sa_solve(problem, SolverConfig(max_iter=5000, theta=50.0, tol=1e-4),
                                        x0=[1.0, 1.0])
        assert result.status == SolveStatus.DIVERGED


class TestSemismoothNewton:
    """SSN on the Fischer-Burmeister system."""

    def test_fb_residual_at_solution(self, example1):
        averaged, _ = ProblemService.freeze_average(example1)
        result = SolverService.ssn_fb_solve(example1, averaged, np.zeros(2))
        assert result.converged
        assert result.residual_kind == "fb"
        Fx = averaged(result.x)
        assert np.linalg.norm(ProblemService.fb_residual(result.x, Fx)) <= 1e-8
        assert np.all(result.x >= -1e-12)

    def test_trace_starts_at_initial_residual(self, example1):
        averaged, _ = ProblemService.freeze_average(example1)
        result = SolverService.ssn_fb_solve(example1, averaged, np.zeros(2))
        expected = np.linalg.norm(ProblemService.fb_residual(np.zeros(2), averaged(np.zeros(2))))
        assert result.trace[0] == pytest.approx(expected)
        assert result.trace[-1] == result.residual

    def test_box_is_rejected(self):
        problem = affine_problem(M, Q, kind="SVI", ground_set=GroundSet.box([0, 0], [1, 1]))
        averaged, _ = ProblemService.freeze_average(problem)
        with pytest.raises(ModelValidationError):
            SolverService.ssn_fb_solve(problem, averaged, np.zeros(2))

    def test_free_block_equations(self):
        # x1 ≥ 0 ⟂ x1 - 1 + x2, x2 free with x2 - 3 = 0
        problem = affine_problem([[1.0, 1.0], [0.0, 1.0]], [-1.0, -3.0], kind="MixedSCP",
                                 ground_set=GroundSet.mixed(1, 1))
        averaged, _ = ProblemService.freeze_average(problem)
        result = SolverService.ssn_fb_solve(problem, averaged, np.zeros(2))
        assert result.converged
        np.testing.assert_allclose(result.x, [0.0, 3.0], atol=1e-9)


class TestExtragradient:
    """Projected extragradient."""

    def test_box_solution(self):
        ground_set = GroundSet.box([0.0, 0.0], [1.0, 1.0])
        problem = affine_problem(M, Q, kind="SVI", ground_set=ground_set)
        averaged, _ = ProblemService.freeze_average(problem)
        result = SolverService.extragradient_solve(ground_set, averaged, np.zeros(2))
        assert result.converged
        # F2 < 0 on the box pins x2 at its upper bound; then F1 = 2 x1 - 1 = 0
        np.testing.assert_allclose(result.x, [0.5, 1.0], atol=1e-7)
        assert result.details["step"] == pytest.approx(0.9 / 3.0, rel=1e-6)

    def test_trace_is_residual_history(self, example1_svi):
        averaged, _ = ProblemService.freeze_average(example1_svi)
        result = SolverService.extragradient_solve(example1_svi.ground_set, averaged, np.zeros(2))
        assert len(result.trace) == result.iterations + 1
        assert result.trace[-1] <= 1e-8

    def test_residual_never_increases_after_warmup(self, example1_svi):
        averaged, _ = ProblemService.freeze_average(example1_svi)
        result = SolverService.extragradient_solve(example1_svi.ground_set, averaged, np.zeros(2))
        assert len(result.trace) > 11
        assert np.all(np.diff(result.trace[10:]) <= 1e-12)

    def test_matches_oracle_on_random_strongly_monotone_problems(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            B, C = rng.normal(0.0, 0.5, (2, 3, 3))
            M3 = np.eye(3) + B @ B.T + (C - C.T) / 2.0
            q3 = 2.0 * rng.normal(size=3)
            problem = affine_problem(M3, q3, kind="SVI")
            averaged, _ = ProblemService.freeze_average(problem)
            result = SolverService.extragradient_solve(problem.ground_set, averaged, np.zeros(3))
            oracle = LcpService.enumerate_lcp_solutions(LcpInstance(M3, q3))
            assert result.converged
            assert len(oracle.solutions) == 1
            np.testing.assert_allclose(result.x, oracle.solutions[0], atol=1e-6)

    def test_backtracking_on_nonlinear_map(self, cournot_config):
        _, smoothed = CournotService.build_cournot(cournot_config)
        averaged, _ = ProblemService.freeze_average(smoothed)
        result = SolverService.extragradient_solve(smoothed.ground_set, averaged, np.zeros(2))
        assert result.converged
        np.testing.assert_allclose(result.x, [19.0 / 3.5] * 2, atol=1e-6)

    def test_max_iter(self, example1_svi):
        averaged, _ = ProblemService.freeze_average(example1_svi)
        result = SolverService.extragradient_solve(example1_svi.ground_set, averaged, np.zeros(2),
                                                   SolverConfig(max_iter=2))
        assert result.status == SolveStatus.MAX_ITER
        assert result.iterations == 2


class TestErm:
    """Expected residual minimization."""

    def test_single_scenario_reaches_zero(self):
        problem = affine_problem(M, Q, scenarios=ScenarioModel.single([0.0]))
        result = SolverService.erm_solve(problem)
        assert result.residual <= 1e-6
        np.testing.assert_allclose(result.x, [0.0, 2.0], atol=1e-6)

    def test_example1_improves_on_expected_value_solution(self, example1):
        result = SolverService.erm_solve(example1)
        ev_objective = SolverService.erm_objective(example1, [0.0, 2.0], example1.scenario_model.outcomes,
                                                   example1.scenario_model.probabilities)
        assert ev_objective == pytest.approx(0.5 * (3.0 - np.sqrt(5.0)) + 0.5 * np.hypot(2.0, np.sqrt(5.0) - 1.0))
        assert result.residual < ev_objective - 1e-6
        # the minimizer is the second scenario's LCP solution
        np.testing.assert_allclose(result.x, [1.0 / 3.0, 7.0 / 3.0], atol=1e-6)

    def test_example1_matches_grid_scan(self, example1):
        result = SolverService.erm_solve(example1)
        grid = example1_erm_grid(np.arange(0.0, 1.0005, 1e-3), np.arange(1.0, 3.0005, 1e-3))
        assert result.residual <= grid + 1e-4

    def test_stage_objectives_never_increase(self, example1):
        result = SolverService.erm_solve(example1, x0=[0.0, 0.0])
        stages = result.details["stage_objectives"]
        assert len(stages) == 9
        assert all(b <= a for a, b in zip(stages, stages[1:]))
        assert result.details["start"] == "user"

    def test_requires_orthant_scp(self, example1_svi):
        with pytest.raises(ModelValidationError):
            SolverService.erm_solve(example1_svi)


class TestQviFixedPoint:
    """Fixed-point iteration for moving-set problems."""

    def test_shared_capacity_cournot(self, cournot_capacity_config):
        _, smoothed = CournotService.build_cournot(cournot_capacity_config)
        result = SolverService.qvi_fixed_point(smoothed, SolverConfig(tol=1e-8, max_iter=50))
        assert result.converged
        np.testing.assert_allclose(result.x, [19.0 / 3.5] * 2, atol=1e-6)
        assert result.details["contractive"] is False
        assert any("not contractive" in note for note in result.details["notes"])

    def test_requires_sqvi(self, example1):
        with pytest.raises(ModelValidationError):
            SolverService.qvi_fixed_point(example1)

    def test_one_dimensional_fixed_point(self):
        # F(x) = x - 2 on K(x) = [x/4, ∞): x = 2 lies in K(2) = [1/2, ∞)
        moving = MovingSet([0.0], [[0.25]], [np.inf], [[0.0]])
        problem = ProblemInstance("SQVI", GroundSet.box([0.0], [np.inf]), RandomAffineMap([[1.0]], [-2.0]),
                                  ScenarioModel.single([0.0]), moving)
        result = SolverService.qvi_fixed_point(problem)
        assert result.converged
        np.testing.assert_allclose(result.x, [2.0], atol=1e-7)
        assert result.details["contractive"] is True
        assert result.details["notes"] == []

    def test_constant_set_reduces_to_saa(self, example1):
        box = GroundSet.box([0.0, 0.0], [np.inf, np.inf])
        problem = ProblemInstance("SQVI", box, example1.map, example1.scenario_model, MovingSet.constant(box))
        result = SolverService.qvi_fixed_point(problem)
        assert result.converged
        np.testing.assert_allclose(result.x, SolverService.saa_solve(example1).x, atol=1e-6)
