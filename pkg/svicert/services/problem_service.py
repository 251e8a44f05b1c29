"""Projections, map evaluation, residuals and expectation estimates."""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from svicert.config import Config
from svicert.models.problem import (
    AveragedMap,
    DimensionError,
    ExpectationEstimate,
    GroundSet,
    IntervalValuedMap,
    MultiValuedMapError,
    ProblemInstance,
    ScenarioModel,
    check_vector,
)
from svicert.utils.helpers import derive_rng

logger = logging.getLogger(__name__)

Selector = Union[str, Sequence[str]]


class ProblemService:
    """Service for evaluating problems: projections, maps, residuals, expectations."""

    @staticmethod
    def project(ground_set: GroundSet, x) -> np.ndarray:
        """Euclidean projection of x onto the set."""
        return ground_set.project(x)

    @staticmethod
    def eval_map(problem: ProblemInstance, x, omega) -> np.ndarray:
        """F(x; ω) for a single-valued map."""
        if not problem.map.single_valued:
            raise MultiValuedMapError("Interval-valued map passed; use eval_selection")
        x = check_vector(x, problem.dim)
        omega = ProblemService._check_omega(problem, omega)
        return problem.map.evaluate(x, omega)

    @staticmethod
    def eval_selection(interval_map: IntervalValuedMap, x, omega, selector: Selector) -> np.ndarray:
        """Endpoint selection of an interval image; ``selector`` is 'lower'/'upper' or one per component."""
        x = check_vector(x, interval_map.dim)
        lower, upper = interval_map.bounds(x, omega)
        if isinstance(selector, str):
            selector = [selector] * interval_map.dim
        if len(selector) != interval_map.dim:
            raise DimensionError(f"Selector has {len(selector)} entries, expected {interval_map.dim}")
        choose_upper = np.array([s.lower() == "upper" for s in selector])
        return np.where(choose_upper, upper, lower)

    @staticmethod
    def expected_map(problem: ProblemInstance, x, mode: str = "exact",
                     samples: Optional[int] = None, seed: Optional[int] = None) -> ExpectationEstimate:
        """E[F(x; ω)], exactly for finite models or by Monte Carlo."""
        if not problem.map.single_valued:
            raise MultiValuedMapError("Expectation of an interval-valued map; use expected_interval")
        x = check_vector(x, problem.dim)
        model = problem.scenario_model

        if mode == "exact":
            if not model.is_finite:
                raise ValueError("Exact finite-sum expectation requested on a sampler scenario model")
            value = np.zeros(problem.dim)
            for prob, omega in zip(model.probabilities, model.outcomes):
                value += prob * problem.map.evaluate(x, omega)
            return ExpectationEstimate(value=value, mode="exact")

        if mode != "montecarlo":
            raise ValueError(f"Unknown expectation mode {mode!r}")
        samples = samples or Config.DEFAULT_SAA_SAMPLES
        seed = Config.DEFAULT_SEED if seed is None else seed
        draws = ProblemService.sample_scenarios(model, samples, seed)
        values = np.array([problem.map.evaluate(x, omega) for omega in draws])
        if samples > 1:
            stderr = values.std(axis=0, ddof=1) / np.sqrt(samples)
        else:
            stderr = np.zeros(problem.dim)
        return ExpectationEstimate(value=values.mean(axis=0), mode="montecarlo",
                                   samples=samples, seed=seed, stderr=stderr)

    @staticmethod
    def expected_interval(problem: ProblemInstance, x, mode: str = "exact",
                          samples: Optional[int] = None, seed: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Expected lower and upper selections of an interval-valued map."""
        interval_map = problem.map
        if interval_map.single_valued:
            value = ProblemService.expected_map(problem, x, mode, samples, seed).value
            return value, value
        x = check_vector(x, problem.dim)
        if mode == "exact":
            if not problem.scenario_model.is_finite:
                raise ValueError("Exact finite-sum expectation requested on a sampler scenario model")
            weights = problem.scenario_model.probabilities
            draws = problem.scenario_model.outcomes
        else:
            samples = samples or Config.DEFAULT_SAA_SAMPLES
            draws = ProblemService.sample_scenarios(problem.scenario_model, samples,
                                                    Config.DEFAULT_SEED if seed is None else seed)
            weights = np.full(samples, 1.0 / samples)
        lower = np.zeros(problem.dim)
        upper = np.zeros(problem.dim)
        for weight, omega in zip(weights, draws):
            lo, hi = interval_map.bounds(x, omega)
            lower += weight * lo
            upper += weight * hi
        return lower, upper

    @staticmethod
    def natural_residual(problem: Union[ProblemInstance, GroundSet], x, Fx) -> float:
        """‖x - Π_K(x - F)‖₂ (K(x) for SQVI problems)."""
        if isinstance(problem, ProblemInstance):
            ground_set = problem.feasible_set(x) if problem.kind == "SQVI" else problem.ground_set
        else:
            ground_set = problem
        x = check_vector(x, ground_set.dim)
        Fx = check_vector(Fx, ground_set.dim, "Fx")
        return float(np.linalg.norm(x - ground_set.project(x - Fx)))

    @staticmethod
    def interval_natural_residual(ground_set: GroundSet, x, lower, upper) -> float:
        """Natural residual using the best selection w ∈ [lower, upper] per component."""
        x = check_vector(x, ground_set.dim)
        # x - clip(x - w) is nondecreasing in w, so the best w is found at the endpoints
        at_lower = x - np.clip(x - lower, ground_set.lower, ground_set.upper)
        at_upper = x - np.clip(x - upper, ground_set.lower, ground_set.upper)
        best = np.where((at_lower <= 0) & (at_upper >= 0), 0.0,
                        np.minimum(np.abs(at_lower), np.abs(at_upper)))
        return float(np.linalg.norm(best))

    @staticmethod
    def fb_residual(x, Fx) -> np.ndarray:
        """Componentwise Fischer-Burmeister residual √(x² + F²) - (x + F)."""
        x = np.asarray(x, dtype=float)
        Fx = np.asarray(Fx, dtype=float)
        if x.shape != Fx.shape:
            raise DimensionError(f"x has shape {x.shape}, F has shape {Fx.shape}")
        return np.hypot(x, Fx) - (x + Fx)

    @staticmethod
    def fb_system(x, Fx, nonneg_mask: np.ndarray) -> np.ndarray:
        """FB residual on the nonnegative block, raw equations on the free block."""
        fb = ProblemService.fb_residual(x, Fx)
        return np.where(nonneg_mask, fb, Fx)

    @staticmethod
    def scenario_rng(model: ScenarioModel, seed: int, subsystem: str, task: int = 0) -> np.random.Generator:
        """Run stream for ``subsystem``; sampler models salt it with their own seed."""
        return derive_rng(seed, subsystem, task, salt=None if model.is_finite else model.seed)

    @staticmethod
    def sample_scenarios(model: ScenarioModel, count: int, seed: int, task: int = 0) -> np.ndarray:
        """``count`` outcomes drawn from the model's stream for (seed, task)."""
        return model.draw(count, ProblemService.scenario_rng(model, seed, "scenarios", task))

    @staticmethod
    def freeze_average(problem: ProblemInstance, samples: Optional[int] = None,
                       seed: Optional[int] = None) -> Tuple[AveragedMap, dict]:
        """Averaged map: exact weights for finite models unless ``samples`` is given."""
        model = problem.scenario_model
        if samples is None and model.is_finite:
            details = {"mode": "exact", "samples": int(model.outcomes.shape[0]), "seed": None}
            return AveragedMap(problem.map, model.outcomes, model.probabilities), details

        samples = samples or Config.DEFAULT_SAA_SAMPLES
        seed = Config.DEFAULT_SEED if seed is None else seed
        draws = ProblemService.sample_scenarios(model, samples, seed)
        logger.debug(f"Froze sample average over {samples} scenarios (seed {seed})")
        details = {"mode": "montecarlo", "samples": int(samples), "seed": int(seed)}
        return AveragedMap(problem.map, draws, np.full(samples, 1.0 / samples)), details

    @staticmethod
    def _check_omega(problem: ProblemInstance, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if omega.ndim != 1 or omega.size < problem.map.omega_dim:
            raise DimensionError(f"ω has shape {omega.shape}, map reads {problem.map.omega_dim} coordinates")
        return omega
