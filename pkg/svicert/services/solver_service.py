"""Solvers for SVI / SCP / MixedSCP / SQVI instances."""

import logging
from dataclasses import replace
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg

from svicert.config import DIVERGENCE_THRESHOLD, Config
from svicert.models.problem import (
    AveragedMap,
    GroundSet,
    ModelValidationError,
    MultiValuedMapError,
    ProblemInstance,
)
from svicert.models.results import SolverConfig, SolveResult, SolveStatus
from svicert.services.problem_service import ProblemService
from svicert.utils.helpers import derive_rng, parallel_map

logger = logging.getLogger(__name__)

ARMIJO_SIGMA = 1e-4
ERM_SCENARIO_STARTS = 64


def _diverged(value) -> bool:
    value = np.asarray(value, dtype=float)
    return not np.all(np.isfinite(value)) or float(np.max(np.abs(value), initial=0.0)) > DIVERGENCE_THRESHOLD


class SolverService:
    """Service for solving stochastic variational problems."""

    @staticmethod
    def lipschitz_estimate(matrix: np.ndarray, seed: int = Config.DEFAULT_SEED, iterations: int = 100) -> float:
        """Power-iteration estimate of ‖A‖₂."""
        rng = derive_rng(seed, "power-iteration")
        v = rng.standard_normal(matrix.shape[1])
        v /= np.linalg.norm(v)
        estimate = 0.0
        for _ in range(iterations):
            w = matrix.T @ (matrix @ v)
            norm = np.linalg.norm(w)
            if norm == 0.0:
                return 0.0
            v = w / norm
            estimate = np.sqrt(norm)
        return float(estimate)

    @staticmethod
    def extragradient_solve(ground_set: GroundSet, averaged_map: Callable, x0,
                            config: SolverConfig = SolverConfig()) -> SolveResult:
        """Projected extragradient: y = Π(x - τF(x)), x⁺ = Π(x - τF(y))."""
        x = ground_set.project(x0)
        Fx = averaged_map(x)
        backtrack = False

        if config.step is not None:
            tau = config.step
        elif isinstance(averaged_map, AveragedMap) and averaged_map.is_affine:
            lipschitz = SolverService.lipschitz_estimate(averaged_map.matrix, config.seed)
            tau = 0.9 / lipschitz if lipschitz > 0 else 1.0
        else:
            tau = 1.0
            backtrack = True

        trace = []
        status = SolveStatus.MAX_ITER
        iterations = 0
        logger.info(f"Extragradient start: n={ground_set.dim}, tau={tau:.3g}, backtracking={backtrack}")

        for iterations in range(config.max_iter + 1):
            residual = float(np.linalg.norm(x - ground_set.project(x - Fx)))
            trace.append(residual)
            if _diverged(residual) or _diverged(x):
                status = SolveStatus.DIVERGED
                break
            if residual <= config.tol:
                status = SolveStatus.CONVERGED
                break
            if iterations == config.max_iter:
                break

            y = ground_set.project(x - tau * Fx)
            Fy = averaged_map(y)
            if backtrack:
                while tau * np.linalg.norm(Fx - Fy) > 0.9 * np.linalg.norm(x - y) and tau > 1e-12:
                    tau *= 0.5
                    y = ground_set.project(x - tau * Fx)
                    Fy = averaged_map(y)
            x = ground_set.project(x - tau * Fy)
            Fx = averaged_map(x)
            logger.debug(f"extragradient iter {iterations + 1}: residual {residual:.3e}")

        logger.info(f"Extragradient {status.value} after {iterations} iterations (residual {trace[-1]:.3e})")
        return SolveResult(x=x, residual=trace[-1], iterations=iterations, status=status,
                           method="extragradient", residual_kind="natural", trace=trace,
                           config=config.echo(), details={"step": float(tau)})

    @staticmethod
    def saa_solve(problem: ProblemInstance, config: SolverConfig = SolverConfig(), x0=None) -> SolveResult:
        """Sample-average approximation: freeze the averaged map, then solve deterministically."""
        if not problem.map.single_valued:
            raise MultiValuedMapError("SAA needs a single-valued map")
        averaged, details = ProblemService.freeze_average(problem, config.samples, config.seed)
        x0 = np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=float)
        logger.info(f"SAA on {problem.kind} with {details['samples']} scenarios ({details['mode']})")

        if problem.is_complementarity:
            result = SolverService.ssn_fb_solve(problem, averaged, x0, config)
        elif problem.kind == "SQVI":
            result = SolverService.qvi_fixed_point(problem, config, x0, averaged)
        else:
            result = SolverService.extragradient_solve(problem.ground_set, averaged, x0, config)

        details["inner_method"] = result.method
        details.update(result.details)
        if details["mode"] == "montecarlo":
            values = np.array([problem.map.evaluate(result.x, omega) for omega in averaged.scenarios])
            count = values.shape[0]
            stderr = values.std(axis=0, ddof=1) / np.sqrt(count) if count > 1 else np.zeros(problem.dim)
            details["stderr"] = [float(v) for v in stderr]
        return replace(result, method="saa", details=details)

    @staticmethod
    def sa_solve(problem: ProblemInstance, config: SolverConfig = SolverConfig(), x0=None) -> SolveResult:
        """Projected stochastic approximation x⁺ = Π(x - (θ/k) F(x; ω_k)) with tail averaging."""
        if not problem.map.single_valued:
            raise MultiValuedMapError("Stochastic approximation needs a single-valued map")
        ground_set = problem.ground_set
        x = ground_set.project(np.zeros(problem.dim) if x0 is None else x0)
        rng = ProblemService.scenario_rng(problem.scenario_model, config.seed, "sa")
        draws = problem.scenario_model.draw(config.max_iter, rng)
        tail_start = config.max_iter // 2
        tail_sum = np.zeros(problem.dim)
        tail_count = 0
        status = SolveStatus.MAX_ITER
        checkpoint = max(1, config.max_iter // 100)
        reference = SolverService._reference_map(problem, config)
        trace = []

        logger.info(f"SA start: {config.max_iter} iterations, theta={config.theta}, seed={config.seed}")
        for k in range(1, config.max_iter + 1):
            x = ground_set.project(x - (config.theta / k) * problem.map.evaluate(x, draws[k - 1]))
            if _diverged(x):
                status = SolveStatus.DIVERGED
                logger.warning(f"SA diverged at iteration {k}")
                break
            if k > tail_start:
                tail_sum += x
                tail_count += 1
            if k % checkpoint == 0:
                trace.append(ProblemService.natural_residual(ground_set, x, reference(x)))

        if config.averaging and tail_count and status != SolveStatus.DIVERGED:
            x = tail_sum / tail_count
        residual = ProblemService.natural_residual(ground_set, x, reference(x)) if not _diverged(x) else float("inf")
        if status != SolveStatus.DIVERGED and residual <= config.tol:
            status = SolveStatus.CONVERGED
        logger.info(f"SA {status.value}: residual {residual:.3e}")
        return SolveResult(x=x, residual=residual, iterations=k, status=status, method="sa",
                           residual_kind="natural", trace=trace, config=config.echo(),
                           details={"seed": int(config.seed), "averaging": bool(config.averaging),
                                    "tail_iterates": int(tail_count)})

    @staticmethod
    def _reference_map(problem: ProblemInstance, config: SolverConfig) -> AveragedMap:
        if problem.scenario_model.is_finite:
            return ProblemService.freeze_average(problem)[0]
        samples = max(10 * Config.DEFAULT_SAA_SAMPLES, 10000)
        reference, _ = ProblemService.freeze_average(problem, samples, config.seed + 1)
        return reference

    @staticmethod
    def ssn_fb_solve(problem: ProblemInstance, averaged_map: Callable, x0=None,
                     config: SolverConfig = SolverConfig()) -> SolveResult:
        """Semismooth Newton on [Φ_FB on the nonnegative block; raw equations on the free block]."""
        if not problem.ground_set.is_cone:
            raise ModelValidationError("Semismooth Newton needs an orthant or mixed-partition cone")
        nonneg = problem.ground_set.nonneg_mask()
        x = np.zeros(problem.dim) if x0 is None else np.array(x0, dtype=float)
        x[nonneg] = np.maximum(x[nonneg], 0.0)

        Fx = averaged_map(x)
        phi = ProblemService.fb_system(x, Fx, nonneg)
        merit = 0.5 * float(phi @ phi)
        trace = []
        status = SolveStatus.MAX_ITER
        fallbacks = 0
        iterations = 0

        for iterations in range(config.max_iter + 1):
            norm = float(np.sqrt(2.0 * merit))
            trace.append(norm)
            if _diverged(x) or _diverged(norm):
                status = SolveStatus.DIVERGED
                break
            if norm <= config.tol:
                status = SolveStatus.CONVERGED
                break
            if iterations == config.max_iter:
                break

            H = SolverService._fb_jacobian(x, Fx, averaged_map.jacobian(x), nonneg)
            gradient = H.T @ phi
            try:
                direction = scipy.linalg.solve(H, -phi)
                if not np.all(np.isfinite(direction)) or gradient @ direction > -1e-12 * np.linalg.norm(direction) * np.linalg.norm(gradient):
                    raise np.linalg.LinAlgError("not a descent direction")
            except (np.linalg.LinAlgError, ValueError):
                direction = -gradient
                fallbacks += 1

            step = 1.0
            slope = float(gradient @ direction)
            while True:
                trial = x + step * direction
                trial_F = averaged_map(trial)
                trial_phi = ProblemService.fb_system(trial, trial_F, nonneg)
                trial_merit = 0.5 * float(trial_phi @ trial_phi)
                if trial_merit <= merit + ARMIJO_SIGMA * step * slope or step < 1e-14:
                    break
                step *= 0.5
            x, Fx, phi, merit = trial, trial_F, trial_phi, trial_merit
            logger.debug(f"ssn iter {iterations + 1}: |Phi|={np.sqrt(2 * merit):.3e}, step={step:.3g}")

        logger.info(f"SSN {status.value} after {iterations} iterations (|Phi|={trace[-1]:.3e})")
        return SolveResult(x=x, residual=trace[-1], iterations=iterations, status=status,
                           method="ssn", residual_kind="fb", trace=trace, config=config.echo(),
                           details={"gradient_fallbacks": fallbacks})

    @staticmethod
    def _fb_jacobian(x: np.ndarray, Fx: np.ndarray, jacobian: np.ndarray, nonneg: np.ndarray) -> np.ndarray:
        """Element of the generalized Jacobian of the FB system."""
        H = np.array(jacobian, dtype=float)
        radius = np.hypot(x, Fx)
        degenerate = nonneg & (radius <= 1e-14)
        z = degenerate.astype(float)
        Jz = jacobian @ z
        for i in np.flatnonzero(nonneg):
            if degenerate[i]:
                scale = np.hypot(z[i], Jz[i])
                da, db = z[i] / scale - 1.0, Jz[i] / scale - 1.0
            else:
                da, db = x[i] / radius[i] - 1.0, Fx[i] / radius[i] - 1.0
            H[i] = db * jacobian[i]
            H[i, i] += da
        return H

    @staticmethod
    def erm_objective(problem: ProblemInstance, x, scenarios: np.ndarray, weights: np.ndarray) -> float:
        """Σ_k w_k ‖Φ_FB(x, F(x; ω_k))‖."""
        total = 0.0
        for weight, omega in zip(weights, scenarios):
            total += weight * float(np.linalg.norm(ProblemService.fb_residual(x, problem.map.evaluate(x, omega))))
        return total

    @staticmethod
    def erm_solve(problem: ProblemInstance, config: SolverConfig = SolverConfig(), x0=None) -> SolveResult:
        """Expected residual minimization over x ≥ 0 with μ-continuation of the smoothed FB function."""
        if problem.kind != "SCP" or problem.ground_set.variant != "orthant":
            raise ModelValidationError("ERM is defined for SCP problems over the nonnegative orthant")
        model = problem.scenario_model
        if config.samples is None and model.is_finite:
            scenarios, weights = model.outcomes, model.probabilities
        else:
            samples = config.samples or Config.DEFAULT_SAA_SAMPLES
            scenarios = ProblemService.sample_scenarios(model, samples, config.seed)
            weights = np.full(samples, 1.0 / samples)

        def true_objective(point):
            return SolverService.erm_objective(problem, point, scenarios, weights)

        if x0 is None:
            start = SolverService.ssn_fb_solve(problem, AveragedMap(problem.map, scenarios, weights),
                                               np.zeros(problem.dim), config)
            x = np.maximum(start.x, 0.0)
            origin = "expected-value"
            if len(weights) <= ERM_SCENARIO_STARTS:
                # the objective has kinks where a single scenario residual vanishes
                start_value = true_objective(x)
                for k in range(len(weights)):
                    single = AveragedMap(problem.map, scenarios[k:k + 1], np.ones(1))
                    candidate = SolverService.ssn_fb_solve(problem, single, np.zeros(problem.dim), config)
                    if not candidate.converged:
                        continue
                    point = np.maximum(candidate.x, 0.0)
                    value = true_objective(point)
                    if value < start_value:
                        x, start_value, origin = point, value, f"scenario-{k}"
        else:
            x = np.maximum(np.asarray(x0, dtype=float), 0.0)
            origin = "user"

        def smoothed(point, mu) -> Tuple[float, np.ndarray]:
            def cell(k):
                omega = scenarios[k]
                F = problem.map.evaluate(point, omega)
                J = problem.map.jacobian(point, omega)
                s = np.sqrt(point ** 2 + F ** 2 + mu ** 2)
                phi = s - point - F
                root = np.sqrt(phi @ phi + mu ** 2)
                jac_phi = np.diag(point / s - 1.0) + (F / s - 1.0)[:, None] * J
                return weights[k] * root, weights[k] * (jac_phi.T @ phi) / root
            cells = parallel_map(cell, range(len(weights)), config.jobs)
            return sum(c[0] for c in cells), np.sum([c[1] for c in cells], axis=0)

        best = true_objective(x)
        trace = [best]
        inner_cap = max(50, config.max_iter // config.mu_stages)
        status = SolveStatus.CONVERGED
        logger.info(f"ERM start ({origin}): objective {best:.6g}, {len(weights)} scenarios")

        for stage, mu in enumerate(config.smoothing_schedule()):
            y = x.copy()
            value, grad = smoothed(y, mu)
            hit_cap = True
            for _ in range(inner_cap):
                if np.linalg.norm(y - np.maximum(y - grad, 0.0)) <= config.tol:
                    hit_cap = False
                    break
                step = 1.0
                while True:
                    trial = np.maximum(y - step * grad, 0.0)
                    trial_value, trial_grad = smoothed(trial, mu)
                    if trial_value <= value + ARMIJO_SIGMA * float(grad @ (trial - y)) or step < 1e-12:
                        break
                    step *= 0.5
                if step < 1e-12:
                    hit_cap = False
                    break
                y, value, grad = trial, trial_value, trial_grad

            candidate = true_objective(y)
            if candidate <= best:
                x, best = y, candidate
            trace.append(best)
            status = SolveStatus.MAX_ITER if hit_cap else SolveStatus.CONVERGED
            logger.debug(f"ERM stage {stage}: mu={mu:.3g}, objective {best:.10g}")

        logger.info(f"ERM {status.value}: objective {best:.10g}")
        return SolveResult(x=x, residual=best, iterations=len(trace) - 1, status=status, method="erm",
                           residual_kind="erm-objective", trace=trace, config=config.echo(),
                           details={"objective": float(best), "start": origin,
                                    "stage_objectives": [float(v) for v in trace],
                                    "scenarios": int(len(weights))})

    @staticmethod
    def qvi_fixed_point(problem: ProblemInstance, config: SolverConfig = SolverConfig(), x0=None,
                        averaged_map: Optional[AveragedMap] = None) -> SolveResult:
        """Fixed-point iteration x_{k+1} = SOL(K(x_k), F̄) for moving-set problems."""
        if problem.kind != "SQVI":
            raise ModelValidationError("qvi_fixed_point needs an SQVI problem")
        if averaged_map is None:
            averaged_map, _ = ProblemService.freeze_average(problem, config.samples, config.seed)
        moving = problem.moving_set
        notes = []
        if not moving.is_contractive():
            notes.append(f"moving set is not contractive (modulus {moving.contraction_modulus():.3g}); "
                         "convergence is not guaranteed")
            logger.warning(notes[-1])

        x = np.zeros(problem.dim) if x0 is None else np.array(x0, dtype=float)
        inner_config = replace(config, max_iter=config.inner_max_iter)
        trace = []
        status = SolveStatus.MAX_ITER
        iterations = 0

        for iterations in range(1, config.max_iter + 1):
            if moving.is_empty_at(x):
                notes.append(f"K(x) is empty at iterate {iterations}")
                logger.warning(notes[-1])
                break
            inner = SolverService.extragradient_solve(moving.at(x), averaged_map, x, inner_config)
            if inner.status == SolveStatus.DIVERGED:
                status = SolveStatus.DIVERGED
                break
            movement = float(np.linalg.norm(inner.x - x))
            trace.append(movement)
            x = inner.x
            step_residual = max(movement, inner.residual)
            if step_residual <= config.tol:
                status = SolveStatus.CONVERGED
                break

        if moving.is_empty_at(x):
            set_residual = float("inf")
        else:
            set_residual = ProblemService.natural_residual(moving.at(x), x, averaged_map(x))
        # the last inner solve certifies x_{k+1} against K(x_k)
        residual = step_residual if trace else set_residual
        logger.info(f"QVI fixed point {status.value} after {iterations} outer iterations")
        return SolveResult(x=x, residual=residual, iterations=iterations, status=status, method="qvi-fp",
                           residual_kind="natural", trace=trace, config=config.echo(),
                           details={"notes": notes, "contractive": moving.is_contractive(),
                                    "set_residual": float(set_residual)})
