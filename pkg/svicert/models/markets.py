"""Market configurations for the Nash-Cournot and networked power-market generators."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from svicert.models.problem import DimensionError, ModelValidationError, ScenarioModel

logger = logging.getLogger(__name__)


def _coefficients(values, rows: Optional[int], name: str) -> np.ndarray:
    """Base + ω-coefficient rows, shape (rows, 1 + d)."""
    array = np.array(values, dtype=float)
    if rows is None:
        array = np.atleast_1d(array)
        if array.ndim != 1:
            raise DimensionError(f"{name} must be a coefficient vector")
        return array
    array = array.reshape(rows, -1) if array.ndim < 2 else array
    if array.shape[0] != rows:
        raise DimensionError(f"{name} has {array.shape[0]} rows, expected {rows}")
    return array


def _evaluate(coefficients: np.ndarray, omega: np.ndarray) -> np.ndarray:
    width = coefficients.shape[-1] - 1
    return coefficients[..., 0] + coefficients[..., 1:] @ np.asarray(omega, dtype=float)[:width]


def _outcome_grid(model: ScenarioModel) -> np.ndarray:
    """Outcomes to validate ω-dependent coefficients on."""
    if model.is_finite:
        return model.outcomes
    corners = []
    for family, first, second in model.distributions:
        corners.append((first, second) if family == "uniform" else (first - 4 * second, first + 4 * second))
    grid = np.array(np.meshgrid(*corners, indexing="ij")).reshape(len(corners), -1).T
    return np.vstack([grid, model.mean()])


@dataclass(frozen=True, eq=False)
class CournotConfig:
    """Nash-Cournot oligopoly with a piecewise-affine inverse demand.

    The price is p(X; ω) = a^j(ω) - b^j(ω) X on piece j. ``intercept`` holds
    a^1 (base, then ω coefficients); ``slopes`` holds one row per piece for
    b^j. Later intercepts follow from continuity at the breakpoints.
    """
    firms: int
    gamma: np.ndarray
    delta: np.ndarray
    breakpoints: np.ndarray
    intercept: np.ndarray
    slopes: np.ndarray
    scenarios: ScenarioModel
    capacity: Optional[float] = None
    smoothing: float = 0.0

    def __post_init__(self):
        if self.firms < 1:
            raise ModelValidationError("Cournot game needs at least one firm")
        gamma = np.array(self.gamma, dtype=float).reshape(-1)
        delta = np.array(self.delta, dtype=float).reshape(-1)
        if gamma.size != self.firms or delta.size != self.firms:
            raise DimensionError("Cost coefficients must have one entry per firm")
        if np.any(gamma < 0) or np.any(delta < 0):
            raise ModelValidationError("Cost coefficients γ and δ must be nonnegative")
        breakpoints = np.array(self.breakpoints, dtype=float).reshape(-1)
        if np.any(breakpoints <= 0) or np.any(np.diff(breakpoints) <= 0):
            raise ModelValidationError("Breakpoints must be positive and strictly increasing")
        intercept = _coefficients(self.intercept, None, "intercept")
        slopes = _coefficients(self.slopes, breakpoints.size + 1, "slopes")
        if self.capacity is not None and self.capacity <= 0:
            raise ModelValidationError("Shared capacity must be positive")
        if self.smoothing < 0:
            raise ModelValidationError("Smoothing width must be nonnegative")
        if breakpoints.size and self.smoothing >= breakpoints[0]:
            raise ModelValidationError("Smoothing window reaches below zero output")

        concave = True
        for omega in _outcome_grid(self.scenarios):
            b = _evaluate(slopes, omega)
            if np.any(b <= 0):
                raise ModelValidationError(f"Price slopes b^j(ω) must be positive (got {b.tolist()} at ω={omega.tolist()})")
            if _evaluate(intercept, omega) <= 0:
                raise ModelValidationError("Price intercept a^1(ω) must be positive")
            concave = concave and not np.any(np.diff(b) < 0)
        if not concave:
            logger.warning("Price slopes decrease across a breakpoint; firm objectives lose convexity")

        for name, value in (("gamma", gamma), ("delta", delta), ("breakpoints", breakpoints),
                            ("intercept", intercept), ("slopes", slopes)):
            object.__setattr__(self, name, value)

    @property
    def pieces(self) -> int:
        return int(self.slopes.shape[0])

    def price_slopes(self, omega) -> np.ndarray:
        """b^j(ω) for every piece."""
        return _evaluate(self.slopes, omega)


@dataclass(frozen=True, eq=False)
class PowerNetworkConfig:
    """Networked power market with Cournot firms and an ISO.

    Prices p_i(S_i; ω) = a_i(ω) - b_i S_i, costs ½κ g² + m(ω) g per
    (firm, node), link flows Σ_i PDF[j, i] (net injection at i) ≤ T_j.
    """
    nodes: int
    firms: int
    link_capacity: np.ndarray
    pdf: np.ndarray
    price_intercept: np.ndarray
    price_slope: np.ndarray
    cost_quadratic: np.ndarray
    cost_linear: np.ndarray
    capacity: np.ndarray
    scenarios: ScenarioModel

    def __post_init__(self):
        if self.nodes < 1 or self.firms < 1:
            raise ModelValidationError("Power market needs at least one node and one firm")
        links = np.array(self.link_capacity, dtype=float).reshape(-1)
        pdf = np.array(self.pdf, dtype=float).reshape(links.size, self.nodes)
        intercept = _coefficients(self.price_intercept, self.nodes, "price_intercept")
        slope = np.array(self.price_slope, dtype=float).reshape(-1)
        kappa = np.array(self.cost_quadratic, dtype=float).reshape(self.firms, self.nodes)
        linear = np.array(self.cost_linear, dtype=float)
        linear = linear.reshape(self.firms, self.nodes, -1)
        cap = np.array(self.capacity, dtype=float).reshape(self.firms, self.nodes)

        if slope.size != self.nodes:
            raise DimensionError("price_slope needs one entry per node")
        if np.any(links < 0):
            raise ModelValidationError("Link capacities T_j must be nonnegative")
        if np.any(slope <= 0):
            raise ModelValidationError("Price slopes b_i must be positive")
        if np.any(kappa < 0):
            raise ModelValidationError("Quadratic cost coefficients κ must be nonnegative")
        if np.any(cap < 0):
            raise ModelValidationError("Generation capacities must be nonnegative")
        for omega in _outcome_grid(self.scenarios):
            if np.any(_evaluate(intercept, omega) <= 0):
                raise ModelValidationError("Price intercepts a_i(ω) must be positive")
            if np.any(_evaluate(linear, omega) < 0):
                raise ModelValidationError("Marginal cost terms m(ω) must be nonnegative")

        for name, value in (("link_capacity", links), ("pdf", pdf), ("price_intercept", intercept),
                            ("price_slope", slope), ("cost_quadratic", kappa),
                            ("cost_linear", linear), ("capacity", cap)):
            object.__setattr__(self, name, value)

    @property
    def links(self) -> int:
        return int(self.link_capacity.size)

    @property
    def block(self) -> int:
        """Size of each (firm, node) block."""
        return self.firms * self.nodes

    @property
    def nonneg_dim(self) -> int:
        return 3 * self.block + self.links

    @property
    def dim(self) -> int:
        return self.nonneg_dim + self.firms

    def intercepts(self, omega) -> np.ndarray:
        return _evaluate(self.price_intercept, omega)

    def marginal_costs(self, omega) -> np.ndarray:
        return _evaluate(self.cost_linear, omega)

    # Variable layout: s (firm-major), g, μ, η, then λ on the free block
    def s_index(self, firm: int, node: int) -> int:
        return firm * self.nodes + node

    def g_index(self, firm: int, node: int) -> int:
        return self.block + firm * self.nodes + node

    def mu_index(self, firm: int, node: int) -> int:
        return 2 * self.block + firm * self.nodes + node

    def eta_index(self, link: int) -> int:
        return 3 * self.block + link

    def lambda_index(self, firm: int) -> int:
        return self.nonneg_dim + firm


@dataclass
class EquilibriumReport:
    complementarity: float
    infeasibility: float
    equation_residual: float
    simplification_gap: float
    tol: float

    @property
    def ok(self) -> bool:
        return max(self.complementarity, self.infeasibility, self.equation_residual) <= self.tol

    def to_dict(self):
        return {
            "complementarity": float(self.complementarity),
            "infeasibility": float(self.infeasibility),
            "equation_residual": float(self.equation_residual),
            "simplification_gap": float(self.simplification_gap),
            "tol": float(self.tol),
            "ok": self.ok,
        }
