"""Nash-Cournot oligopoly with a nonsmooth piecewise-affine price."""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from svicert.config import Config
from svicert.models.markets import CournotConfig
from svicert.models.problem import (
    GroundSet,
    IntervalValuedMap,
    ModelValidationError,
    MovingSet,
    PiecewiseLinear,
    ProblemInstance,
    SmoothMap,
    SmoothTerm,
)
from svicert.models.results import CertificateReport, Verdict
from svicert.services.certificate_service import CertificateService

logger = logging.getLogger(__name__)


def _pad(array: np.ndarray, width: int) -> np.ndarray:
    array = np.atleast_2d(array)
    return np.hstack([array, np.zeros((array.shape[0], width - array.shape[1]))])


class CournotService:
    """Service for building and probing Nash-Cournot games."""

    @staticmethod
    def price_function(config: CournotConfig, smoothing: Optional[float] = None) -> PiecewiseLinear:
        """p(X; ω) as a piecewise-linear function of total output X = Σ x_i."""
        width = max(config.intercept.size, config.slopes.shape[1])
        return PiecewiseLinear(
            weights=np.ones(config.firms),
            breakpoints=config.breakpoints,
            intercept=_pad(config.intercept, width)[0],
            slopes=-_pad(config.slopes, width),
            smoothing=config.smoothing if smoothing is None else smoothing,
        )

    @staticmethod
    def price(config: CournotConfig, total: float, omega) -> float:
        factor = CournotService.price_function(config, 0.0)
        return factor.value(total, omega)

    @staticmethod
    def price_clarke_interval(config: CournotConfig, total: float, omega) -> Tuple[float, float]:
        """Clarke generalized gradient of p at X, as a sorted interval."""
        if total < 0:
            raise ValueError(f"Total output must be nonnegative (got {total})")
        lower, upper, _ = CournotService.price_function(config, 0.0).slope(total, omega)
        return lower, upper

    @staticmethod
    def _components(config: CournotConfig, factor: PiecewiseLinear):
        components = []
        for i in range(config.firms):
            components.append((
                SmoothTerm(coef=config.gamma[i], powers=((i, 1),)),
                SmoothTerm(coef=config.delta[i]),
                SmoothTerm(coef=-1.0, factor=factor, factor_mode="value"),
                SmoothTerm(coef=-1.0, powers=((i, 1),), factor=factor, factor_mode="slope"),
            ))
        return tuple(components)

    @staticmethod
    def shared_capacity_set(firms: int, capacity: float) -> MovingSet:
        """K_i(x_-i) = [0, C - Σ_{j≠i} x_j]."""
        coupling = -(np.ones((firms, firms)) - np.eye(firms))
        return MovingSet(np.zeros(firms), np.zeros((firms, firms)), np.full(firms, float(capacity)), coupling)

    @staticmethod
    def build_cournot(config: CournotConfig) -> Tuple[ProblemInstance, ProblemInstance]:
        """(interval-valued instance, smoothed single-valued instance)."""
        n = config.firms
        exact = CournotService.price_function(config, 0.0)
        smoothed = CournotService.price_function(config)
        interval_map = IntervalValuedMap.clarke(n, CournotService._components(config, exact))
        smooth_map = SmoothMap(n, CournotService._components(config, smoothed), "right")

        ground_set = GroundSet.orthant(n)
        if config.capacity is not None:
            kind, moving = "SQVI", CournotService.shared_capacity_set(n, config.capacity)
        else:
            kind, moving = "SVI", None
        logger.info(f"Built {kind} Cournot game: {n} firms, {config.pieces} price pieces, eps={config.smoothing}")
        return (
            ProblemInstance(kind, ground_set, interval_map, config.scenarios, moving, name="cournot"),
            ProblemInstance(kind, ground_set, smooth_map, config.scenarios, moving, name="cournot-smoothed"),
        )

    @staticmethod
    def firm_objective(config: CournotConfig, firm: int, x, omega) -> float:
        """f_i(x; ω) = c_i(x_i) - x_i p(X; ω)."""
        x = np.asarray(x, dtype=float)
        cost = 0.5 * config.gamma[firm] * x[firm] ** 2 + config.delta[firm] * x[firm]
        return float(cost - x[firm] * CournotService.price(config, float(x.sum()), omega))

    @staticmethod
    def cournot_growth_certificate(config: CournotConfig, direction: Sequence[float],
                                   radii: Optional[Sequence[float]] = None, x_ref=None, threshold: float = 0.0,
                                   scenario_count: Optional[int] = None, seed: int = Config.DEFAULT_SEED,
                                   margin: float = Config.CERT_MARGIN) -> CertificateReport:
        """inf over Φ(x; ω) of wᵀ(x - x_ref) / ‖x‖ along a ray; PASS if the tail increases past ``threshold``."""
        d = np.asarray(direction, dtype=float)
        if d.shape != (config.firms,) or np.any(d < 0) or not np.any(d):
            raise ModelValidationError("Growth direction must be a nonzero vector in the nonnegative orthant")
        d = d / np.linalg.norm(d)
        radii = np.asarray(Config.RAY_R0 * 2.0 ** np.arange(Config.RAY_LEVELS + 1) if radii is None else radii)
        x_ref = np.zeros(config.firms) if x_ref is None else np.asarray(x_ref, dtype=float)
        problem, _ = CournotService.build_cournot(config)
        scenarios = CertificateService.scenario_set(config.scenarios, scenario_count, seed)

        rows = []
        witness = None
        statuses = []
        for s, omega in enumerate(scenarios):
            quotients = []
            for radius in radii:
                x = x_ref + radius * d
                quotients.append(CertificateService._inner_inf(problem, x, x - x_ref, omega) / np.linalg.norm(x))
            quotients = np.array(quotients)
            tail = quotients[-3:]
            increasing = tail.size == 3 and bool(np.all(np.diff(tail) > 0))
            if increasing and tail[-1] > threshold:
                status = "PASS"
            elif tail.size == 3 and np.all(np.diff(tail) <= 0) and tail[-1] <= -margin:
                status = "FAIL"
                if witness is None:
                    witness = {"scenario_index": s, "omega": [float(v) for v in omega],
                               "radius": float(radii[-1]), "value": float(tail[-1])}
            else:
                status = "INCONCLUSIVE"
            statuses.append(status)
            rows.append({"scenario": s, "quotients": [float(q) for q in quotients],
                         "tail_slope": float(tail[-1] - tail[0]) if tail.size > 1 else 0.0, "status": status})

        if witness is not None:
            verdict = Verdict.FAIL
        elif all(status == "PASS" for status in statuses):
            verdict = Verdict.PASS
        else:
            verdict = Verdict.INCONCLUSIVE
        logger.info(f"Cournot growth certificate: {verdict.value}")
        return CertificateReport("cournot-growth", verdict, witness=witness,
                                 evidence=pd.DataFrame(rows).to_dict("records"),
                                 parameters={"direction": [float(v) for v in d], "radii": [float(r) for r in radii],
                                             "x_ref": [float(v) for v in x_ref], "threshold": threshold,
                                             "seed": int(seed)})
