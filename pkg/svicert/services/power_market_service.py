"""Networked power market with Cournot firms, assembled as a mixed complementarity problem."""

import logging
from typing import Optional

import numpy as np

from svicert.config import Config
from svicert.models.markets import EquilibriumReport, PowerNetworkConfig
from svicert.models.problem import (
    DimensionError,
    GroundSet,
    ModelValidationError,
    ProblemInstance,
    RandomAffineMap,
)
from svicert.services.problem_service import ProblemService
from svicert.utils.helpers import derive_rng

logger = logging.getLogger(__name__)


class PowerMarketService:
    """Service for assembling and checking power-market equilibria."""

    @staticmethod
    def assemble(config: PowerNetworkConfig) -> RandomAffineMap:
        """H(z; ω) = M z + q(ω) over z = (s, g, μ, η, λ)."""
        n = config.dim
        width = max(config.price_intercept.shape[1], config.cost_linear.shape[2])
        omega_dim = width - 1
        M = np.zeros((n, n))
        q = np.zeros(n)
        Q = np.zeros((omega_dim, n))
        b = config.price_slope

        for f in range(config.firms):
            lam = config.lambda_index(f)
            for i in range(config.nodes):
                s, g, mu = config.s_index(f, i), config.g_index(f, i), config.mu_index(f, i)

                # s-row: -p'(S_i) s_fi - p_i(S_i) + Σ_j η_j PDF[j, i] - λ_f
                M[s, s] += b[i]
                for h in range(config.firms):
                    M[s, config.s_index(h, i)] += b[i]
                q[s] = -config.price_intercept[i, 0]
                Q[: config.price_intercept.shape[1] - 1, s] = -config.price_intercept[i, 1:]

                # g-row: c'(g) - Σ_j η_j PDF[j, i] + μ_fi + λ_f
                M[g, g] += config.cost_quadratic[f, i]
                M[g, mu] += 1.0
                q[g] = config.cost_linear[f, i, 0]
                Q[: config.cost_linear.shape[2] - 1, g] = config.cost_linear[f, i, 1:]

                for j in range(config.links):
                    eta = config.eta_index(j)
                    M[s, eta] += config.pdf[j, i]
                    M[g, eta] -= config.pdf[j, i]

                # μ-row: cap - g
                M[mu, g] -= 1.0
                q[mu] = config.capacity[f, i]

                # λ-row: Σ_i (s_fi - g_fi)
                M[s, lam] -= 1.0
                M[g, lam] += 1.0
                M[lam, s] += 1.0
                M[lam, g] -= 1.0

        # η-row: T_j - Σ_i PDF[j, i] Σ_h (s_hi - g_hi)
        for j in range(config.links):
            eta = config.eta_index(j)
            q[eta] = config.link_capacity[j]
            for i in range(config.nodes):
                for h in range(config.firms):
                    M[eta, config.s_index(h, i)] -= config.pdf[j, i]
                    M[eta, config.g_index(h, i)] += config.pdf[j, i]

        return RandomAffineMap(M, q, offset_omega=Q if omega_dim else None)

    @staticmethod
    def build_power_market(config: PowerNetworkConfig) -> ProblemInstance:
        """MixedSCP with (s, g, μ, η) on the nonnegative block and λ on the free block."""
        mapping = PowerMarketService.assemble(config)
        if mapping.omega_dim > config.scenarios.omega_dim:
            raise DimensionError(
                f"Market coefficients read {mapping.omega_dim} ω coordinates, "
                f"scenario model provides {config.scenarios.omega_dim}")
        logger.info(f"Built power market: {config.firms} firms, {config.nodes} nodes, "
                    f"{config.links} links, {config.dim} variables")
        return ProblemInstance("MixedSCP", GroundSet.mixed(config.nonneg_dim, config.firms),
                               mapping, config.scenarios, name="power-market")

    @staticmethod
    def power_market_u_bound(config: PowerNetworkConfig, omega) -> float:
        """u(ω) = max_i a_i(ω) · Σ cap."""
        return float(np.max(config.intercepts(omega)) * config.capacity.sum())

    @staticmethod
    def sample_feasible_points(config: PowerNetworkConfig, count: int, seed: int = Config.DEFAULT_SEED,
                               multiplier_scale: float = 10.0) -> np.ndarray:
        """Points with g within caps and each firm's sales splitting its generation across nodes."""
        rng = derive_rng(seed, "power-feasible")
        points = np.zeros((count, config.dim))
        for k in range(count):
            g = config.capacity * rng.random((config.firms, config.nodes))
            shares = rng.dirichlet(np.ones(config.nodes), size=config.firms)
            s = shares * g.sum(axis=1, keepdims=True)
            points[k, : config.block] = s.ravel()
            points[k, config.block: 2 * config.block] = g.ravel()
            points[k, 2 * config.block: 3 * config.block] = rng.exponential(multiplier_scale, config.block)
            points[k, 3 * config.block: config.nonneg_dim] = rng.exponential(multiplier_scale, config.links)
            points[k, config.nonneg_dim:] = rng.normal(0.0, multiplier_scale, config.firms)
        return points

    @staticmethod
    def verify_equilibrium(problem: ProblemInstance, x, tol: float = 1e-8, samples: int = 100,
                           seed: int = Config.DEFAULT_SEED, mode: Optional[str] = None) -> EquilibriumReport:
        """Complementarity, feasibility and free-block residuals at x, plus the inner-product identity gap."""
        if problem.kind != "MixedSCP":
            raise ModelValidationError("verify_equilibrium needs a MixedSCP problem")
        x = np.asarray(x, dtype=float)
        if x.shape != (problem.dim,):
            raise DimensionError(f"x has shape {x.shape}, expected ({problem.dim},)")
        mode = mode or ("exact" if problem.scenario_model.is_finite else "montecarlo")
        H = ProblemService.expected_map(problem, x, mode, seed=seed).value
        nonneg = problem.ground_set.nonneg_mask()

        x_nn, H_nn = x[nonneg], H[nonneg]
        complementarity = float(np.max(np.abs(x_nn * H_nn), initial=0.0))
        infeasibility = float(max(np.max(-x_nn, initial=0.0), np.max(-H_nn, initial=0.0), 0.0))
        equation = float(np.max(np.abs(H[~nonneg]), initial=0.0))

        # (x, λ)ᵀH(x, λ; ω) equals xᵀH(x, 0; ω) on the nonnegative block: the λ terms cancel
        rng = derive_rng(seed, "simplification")
        draws = ProblemService.sample_scenarios(problem.scenario_model, samples, seed, task=1)
        gap = 0.0
        for omega in draws:
            z = np.where(nonneg, rng.exponential(5.0, problem.dim), rng.normal(0.0, 5.0, problem.dim))
            full = float(z @ problem.map.evaluate(z, omega))
            reduced_point = np.where(nonneg, z, 0.0)
            reduced = float(z[nonneg] @ problem.map.evaluate(reduced_point, omega)[nonneg])
            gap = max(gap, abs(full - reduced))

        report = EquilibriumReport(complementarity, infeasibility, equation, gap, tol)
        logger.info(f"Equilibrium check: {report.to_dict()}")
        return report
