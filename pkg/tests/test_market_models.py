"""
Tests for the Nash-Cournot and power-market builders.

Run with: python -m pytest tests/
"""

from dataclasses import replace

import numpy as np
import pytest

from svicert.models import CournotConfig, ModelValidationError, ScenarioModel, Verdict
from svicert.services.certificate_service import CertificateService
from svicert.services.cournot_service import CournotService
from svicert.services.power_market_service import PowerMarketService
from svicert.services.problem_service import ProblemService
from svicert.services.solver_service import SolverService

COURNOT_EQUILIBRIUM = 19.0 / 3.5


class TestCournotPrice:
    """Piecewise-affine inverse demand."""

    def test_price_on_first_piece(self, cournot_config):
        assert CournotService.price(cournot_config, 5.0, [1.0]) == pytest.approx(21.0 - 5.0)

    def test_price_is_continuous_at_breakpoint(self, cournot_config):
        for omega in ([-1.0], [0.0], [1.0]):
            left = CournotService.price(cournot_config, 15.0 - 1e-9, omega)
            right = CournotService.price(cournot_config, 15.0 + 1e-9, omega)
            assert left == pytest.approx(right, abs=1e-7)
        # second piece continues with slope -2
        assert CournotService.price(cournot_config, 16.0, [0.0]) == pytest.approx(5.0 - 2.0)

    def test_clarke_interval(self, cournot_config):
        assert CournotService.price_clarke_interval(cournot_config, 15.0, [0.0]) == (-2.0, -1.0)
        assert CournotService.price_clarke_interval(cournot_config, 5.0, [0.0]) == (-1.0, -1.0)
        assert CournotService.price_clarke_interval(cournot_config, 20.0, [0.0]) == (-2.0, -2.0)

    def test_negative_output_rejected(self, cournot_config):
        with pytest.raises(ValueError):
            CournotService.price_clarke_interval(cournot_config, -1.0, [0.0])

    def test_smoothed_price_agrees_outside_window(self, cournot_config):
        smoothed = CournotService.price_function(cournot_config)
        exact = CournotService.price_function(cournot_config, 0.0)
        for total in (3.0, 14.0, 16.0, 40.0):
            assert smoothed.value(total, [0.5]) == pytest.approx(exact.value(total, [0.5]))
        # the concave kink is rounded off from below by ε/4
        assert smoothed.value(15.0, [0.0]) == pytest.approx(exact.value(15.0, [0.0]) - 0.5 / 4.0)

    def test_nonpositive_slope_rejected(self):
        with pytest.raises(ModelValidationError):
            CournotConfig(firms=1, gamma=[1.0], delta=[1.0], breakpoints=[10.0], intercept=[20.0],
                          slopes=[[1.0], [-1.0]], scenarios=ScenarioModel.single([0.0]))


class TestCournotGame:
    """Generated instances, equilibria and growth."""

    def test_build_shapes(self, cournot_config, cournot_capacity_config):
        exact, smoothed = CournotService.build_cournot(cournot_config)
        assert exact.kind == smoothed.kind == "SVI"
        assert not exact.map.single_valued and smoothed.map.single_valued
        capped, _ = CournotService.build_cournot(cournot_capacity_config)
        assert capped.kind == "SQVI"
        assert capped.moving_set.contains([5.0, 7.0]) and not capped.moving_set.contains([6.0, 7.0])

    def test_interval_map_brackets_scenario_map(self, cournot_config):
        exact, smoothed = CournotService.build_cournot(cournot_config)
        x = np.array([3.0, 4.0])
        lower, upper = exact.map.bounds(x, np.array([0.0]))
        np.testing.assert_allclose(lower, upper)
        np.testing.assert_allclose(lower, smoothed.map.evaluate(x, np.array([0.0])))
        # total output exactly at the kink opens the interval
        lower, upper = exact.map.bounds(np.array([7.5, 7.5]), np.array([0.0]))
        np.testing.assert_allclose(upper - lower, 7.5)

    def test_smoothed_saa_solves_interval_problem(self, cournot_config):
        exact, smoothed = CournotService.build_cournot(cournot_config)
        result = SolverService.saa_solve(smoothed)
        assert result.converged
        np.testing.assert_allclose(result.x, [COURNOT_EQUILIBRIUM] * 2, atol=1e-6)
        lower, upper = ProblemService.expected_interval(exact, result.x)
        assert ProblemService.interval_natural_residual(exact.ground_set, result.x, lower, upper) <= 1e-4

    def test_equilibrium_is_best_response(self, cournot_config):
        x = np.array([COURNOT_EQUILIBRIUM] * 2)
        for firm in range(2):
            for step in (-0.1, 0.1):
                deviation = x.copy()
                deviation[firm] += step
                expected_now = np.mean([CournotService.firm_objective(cournot_config, firm, x, [w])
                                        for w in (-1.0, 1.0)])
                expected_dev = np.mean([CournotService.firm_objective(cournot_config, firm, deviation, [w])
                                        for w in (-1.0, 1.0)])
                assert expected_now <= expected_dev

    def test_multivalued_coercivity(self, cournot_config):
        exact, _ = CournotService.build_cournot(cournot_config)
        report = CertificateService.multivalued_coercivity_certificate(
            exact, CertificateService.make_plan(exact, x_ref=np.zeros(2)))
        assert report.verdict == Verdict.PASS

    def test_growth_certificate(self, cournot_config):
        report = CournotService.cournot_growth_certificate(cournot_config, [1.0, 1.0])
        assert report.verdict == Verdict.PASS
        for row in report.evidence:
            tail = np.array(row["quotients"][-3:])
            assert np.all(np.diff(tail) > 0)

    def test_growth_is_linear_on_first_piece(self, cournot_config):
        radii = [1.0, 2.0, 4.0, 8.0]
        report = CournotService.cournot_growth_certificate(cournot_config, [1.0, 1.0], radii=radii)
        # wᵀd/‖d‖ = 3.5 r - √2 (19 + ω) while total output stays below the breakpoint
        for row in report.evidence:
            np.testing.assert_allclose(np.diff(row["quotients"]), 3.5 * np.diff(radii), atol=1e-9)

    def test_growth_certificate_direction_checked(self, cournot_config):
        with pytest.raises(ModelValidationError):
            CournotService.cournot_growth_certificate(cournot_config, [-1.0, 1.0])

    def test_monopoly_closed_form(self):
        # p = 10 - X, cost 2x: map 2x - 8, so x* = (a - δ) / 2b = 4
        config = CournotConfig(firms=1, gamma=[0.0], delta=[2.0], breakpoints=[], intercept=[10.0],
                               slopes=[[1.0]], scenarios=ScenarioModel.single([0.0]))
        exact, smoothed = CournotService.build_cournot(config)
        lower, upper = exact.map.bounds(np.array([3.0]), np.array([0.0]))
        np.testing.assert_allclose(lower, [-2.0])
        np.testing.assert_allclose(upper, [-2.0])
        result = SolverService.saa_solve(smoothed)
        np.testing.assert_allclose(result.x, [4.0], atol=1e-8)

    def test_firm_objectives_are_convex(self, cournot_config):
        h = 0.05
        for firm in range(2):
            for rival in (0.0, 4.0, 9.0):
                for own in np.arange(h, 20.0, 0.37):
                    x = np.array([own, rival]) if firm == 0 else np.array([rival, own])
                    values = []
                    for step in (-h, 0.0, h):
                        point = x.copy()
                        point[firm] += step
                        values.append(CournotService.firm_objective(cournot_config, firm, point, [1.0]))
                    assert values[0] - 2.0 * values[1] + values[2] >= -1e-8

    def test_smoothed_map_converges_to_selection(self, cournot_config):
        # X = 15.2 sits inside the ε = 0.5 window only
        x = np.array([7.6, 7.6])
        exact, _ = CournotService.build_cournot(cournot_config)
        lower, upper = exact.map.bounds(x, np.array([0.0]))
        np.testing.assert_allclose(lower, upper)
        for eps in (0.5, 0.1, 0.05):
            _, smoothed = CournotService.build_cournot(replace(cournot_config, smoothing=eps))
            gap = np.max(np.abs(smoothed.map.evaluate(x, np.array([0.0])) - lower))
            assert gap <= 20.0 * eps
            if eps < 0.2:
                assert gap == pytest.approx(0.0, abs=1e-12)

    def test_shared_capacity_equilibrium(self, cournot_capacity_config):
        _, smoothed = CournotService.build_cournot(cournot_capacity_config)
        result = SolverService.qvi_fixed_point(smoothed)
        np.testing.assert_allclose(result.x, [COURNOT_EQUILIBRIUM] * 2, atol=1e-6)


class TestPowerMarket:
    """Mixed complementarity power market."""

    def test_monopoly_closed_form(self, power_monopoly_config):
        problem = PowerMarketService.build_power_market(power_monopoly_config)
        assert problem.kind == "MixedSCP" and problem.dim == 4
        result = SolverService.saa_solve(problem)
        assert result.converged
        # s = g = (a - m) / 2b, λ = -m, capacity slack leaves μ = 0
        np.testing.assert_allclose(result.x, [4.0, 4.0, 0.0, -2.0], atol=1e-8)

    def test_symmetric_part_is_psd(self, power_two_node_config):
        mapping = PowerMarketService.assemble(power_two_node_config)
        symmetric = 0.5 * (mapping.matrix + mapping.matrix.T)
        assert np.linalg.eigvalsh(symmetric).min() >= -1e-12

    def test_two_node_equilibrium(self, power_two_node_config):
        problem = PowerMarketService.build_power_market(power_two_node_config)
        assert problem.dim == power_two_node_config.dim == 15
        result = SolverService.saa_solve(problem)
        assert result.converged
        report = PowerMarketService.verify_equilibrium(problem, result.x, tol=1e-6)
        assert report.ok
        assert report.simplification_gap <= 1e-8

    def test_verify_rejects_bad_point(self, power_monopoly_config):
        problem = PowerMarketService.build_power_market(power_monopoly_config)
        report = PowerMarketService.verify_equilibrium(problem, [1.0, 1.0, 0.0, 0.0])
        assert not report.ok

    def test_feasible_points(self, power_two_node_config):
        config = power_two_node_config
        points = PowerMarketService.sample_feasible_points(config, 50, seed=3)
        s = points[:, : config.block]
        g = points[:, config.block: 2 * config.block]
        assert np.all(g <= config.capacity.ravel() + 1e-12)
        np.testing.assert_allclose(s.reshape(50, config.firms, config.nodes).sum(axis=2),
                                   g.reshape(50, config.firms, config.nodes).sum(axis=2))

    def test_lower_bound_on_feasible_points(self, power_two_node_config):
        config = power_two_node_config
        problem = PowerMarketService.build_power_market(config)
        report = CertificateService.lower_bound_certificate(
            problem,
            u=lambda omega: PowerMarketService.power_market_u_bound(config, omega),
            points=lambda rng, count: PowerMarketService.sample_feasible_points(config, count, seed=9),
            samples=10000)
        assert report.verdict == Verdict.PASS
        assert report.witness is None
        assert all(row["status"] == "PASS" for row in report.evidence)

    @pytest.mark.parametrize("changes", [
        {"capacity": 0.5},
        {"capacity": 3.0},
        {"price_slope": 0.1},
        {"cost_quadratic": 0.0},
        {"link_capacity": 0.0},
    ])
    def test_lower_bound_across_configurations(self, power_two_node_config, changes):
        base = power_two_node_config
        config = replace(base, **{name: factor * getattr(base, name) for name, factor in changes.items()})
        problem = PowerMarketService.build_power_market(config)
        points = PowerMarketService.sample_feasible_points(config, 1000, seed=13)
        for omega in problem.scenario_model.outcomes:
            floor = -PowerMarketService.power_market_u_bound(config, omega)
            values = np.array([z @ problem.map.evaluate(z, omega) for z in points])
            assert np.all(values >= floor)

    def test_inner_product_growth(self, power_two_node_config):
        problem = PowerMarketService.build_power_market(power_two_node_config)
        report = CertificateService.scp_growth_certificate(problem, CertificateService.make_plan(problem), "inner")
        assert report.verdict == Verdict.PASS

    def test_perturbed_monopoly_point(self, power_monopoly_config):
        problem = PowerMarketService.build_power_market(power_monopoly_config)
        assert PowerMarketService.verify_equilibrium(problem, [4.0, 4.0, 0.0, -2.0]).ok
        report = PowerMarketService.verify_equilibrium(problem, [4.1, 4.1, 0.0, -2.0])
        assert not report.ok
        assert report.complementarity > 0

    def test_u_bound_formula(self, power_monopoly_config):
        config = replace(power_monopoly_config, capacity=np.array([[5.0]]))
        assert PowerMarketService.power_market_u_bound(config, [0.0]) == pytest.approx(50.0)

    def test_zero_capacity(self, power_two_node_config):
        config = replace(power_two_node_config, capacity=np.zeros_like(power_two_node_config.capacity))
        problem = PowerMarketService.build_power_market(config)
        assert PowerMarketService.power_market_u_bound(config, [0.0]) == 0.0
        points = PowerMarketService.sample_feasible_points(config, 100, seed=5)
        assert np.all(points[:, : 2 * config.block] == 0.0)
        for omega in problem.scenario_model.outcomes:
            for z in points:
                assert z @ problem.map.evaluate(z, omega) >= -1e-9

    def test_zero_capacity_forces_zero_output(self, power_monopoly_config):
        config = replace(power_monopoly_config, capacity=np.zeros((1, 1)))
        problem = PowerMarketService.build_power_market(config)
        # g = 0 and s = g; any λ ≤ -10 with μ = -2 - λ completes an equilibrium
        assert PowerMarketService.verify_equilibrium(problem, [0.0, 0.0, 10.0, -12.0]).ok
        assert not PowerMarketService.verify_equilibrium(problem, [1.0, 1.0, 0.0, -2.0]).ok

    def test_jacobian_matches_finite_differences(self, power_two_node_config):
        problem = PowerMarketService.build_power_market(power_two_node_config)
        rng = np.random.default_rng(4)
        z = rng.random(problem.dim)
        omega = problem.scenario_model.outcomes[0]
        jacobian = problem.map.jacobian(z, omega)
        h = 1e-6
        for j in range(problem.dim):
            step = np.zeros(problem.dim)
            step[j] = h
            column = (problem.map.evaluate(z + step, omega) - problem.map.evaluate(z - step, omega)) / (2 * h)
            np.testing.assert_allclose(jacobian[:, j], column, atol=1e-6)
