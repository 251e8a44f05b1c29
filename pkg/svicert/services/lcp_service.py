"""Exact small-scale LCP machinery: Lemke, support enumeration, copositivity and R0 verdicts."""

import itertools
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from svicert.config import Config
from svicert.models.results import (
    CopositivityVerdict,
    EnumerationResult,
    LcpInstance,
    LemkeResult,
    R0Verdict,
)

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-12


class OracleSizeError(ValueError):
    """Raised when an exhaustive oracle is asked for a problem above its size limit."""


class LcpService:
    """Service for exact LCP solves and matrix-class verdicts."""

    @staticmethod
    def lemke_solve(lcp: LcpInstance, max_pivots: Optional[int] = None) -> LemkeResult:
        """Lemke's complementary pivoting with covering vector 1 and lexicographic ratio tests."""
        n = lcp.dim
        q = lcp.q
        if np.all(q >= 0):
            return LemkeResult("Solution", np.zeros(n), 0)

        max_pivots = max_pivots or max(1000, 50 * n * n)
        # columns: w (n), z (n), z0, rhs
        tableau = np.hstack([np.eye(n), -lcp.M, -np.ones((n, 1)), q.reshape(-1, 1)])
        z0 = 2 * n
        basis = list(range(n))

        # z0 enters at the most negative q_i; ties broken lexicographically
        rows = np.hstack([q.reshape(-1, 1), np.eye(n)])
        row = LcpService._lexico_argmin(rows, list(range(n)), prefer=None)
        entering = z0
        pivots = 0

        while True:
            LcpService._pivot(tableau, row, entering)
            leaving = basis[row]
            basis[row] = entering
            pivots += 1
            if leaving == z0:
                break
            if pivots >= max_pivots:
                logger.warning(f"Lemke stopped after {pivots} pivots")
                return LemkeResult("MaxPivots", None, pivots)

            entering = leaving + n if leaving < n else leaving - n
            column = tableau[:, entering]
            candidates = [i for i in range(n) if column[i] > PIVOT_TOL]
            if not candidates:
                logger.info(f"Lemke ray termination after {pivots} pivots")
                return LemkeResult("RayTermination", None, pivots)
            ratios = np.hstack([tableau[:, -1:], tableau[:, :n]]) / np.where(column > PIVOT_TOL, column, 1.0)[:, None]
            z0_row = basis.index(z0)
            row = LcpService._lexico_argmin(ratios, candidates, prefer=z0_row)

        x = np.zeros(n)
        for index, var in enumerate(basis):
            if n <= var < 2 * n:
                x[var - n] = tableau[index, -1]
        x = np.maximum(x, 0.0)
        logger.debug(f"Lemke solved n={n} in {pivots} pivots")
        return LemkeResult("Solution", x, pivots)

    @staticmethod
    def _pivot(tableau: np.ndarray, row: int, col: int):
        tableau[row] /= tableau[row, col]
        for other in range(tableau.shape[0]):
            if other != row and tableau[other, col] != 0.0:
                tableau[other] -= tableau[other, col] * tableau[row]

    @staticmethod
    def _lexico_argmin(rows: np.ndarray, candidates: Sequence[int], prefer: Optional[int]) -> int:
        """Row index whose vector is lexicographically smallest among ``candidates``."""
        best = list(candidates)
        for column in range(rows.shape[1]):
            values = rows[best, column]
            low = values.min()
            scale = max(1.0, abs(low))
            best = [i for i, v in zip(best, values) if v <= low + 1e-12 * scale]
            if prefer is not None and prefer in best and column == 0:
                return prefer
            if len(best) == 1:
                return best[0]
        return best[0]

    @staticmethod
    def enumerate_lcp_solutions(lcp: LcpInstance, tol: float = 1e-9,
                                max_dim: Optional[int] = None) -> EnumerationResult:
        """All complementary-support solutions of LCP(q, M), by brute force over the 2ⁿ supports.

        A support whose block M_αα is singular is listed in ``degenerate_supports``
        and contributes at most its minimum-norm solution, so a ray of solutions
        collapses to one point. With M = [[0, 1], [1, 0]] and q = 0 only the zero
        solution on support () is reported, although every (t, 0) solves.
        """
        n = lcp.dim
        max_dim = max_dim or Config.ORACLE_MAX_DIM
        if n > max_dim:
            raise OracleSizeError(f"Enumeration oracle is limited to n <= {max_dim} (got n={n})")

        solutions: List[np.ndarray] = []
        supports: List[Tuple[int, ...]] = []
        degenerate: List[Tuple[int, ...]] = []

        for size in range(n + 1):
            for support in itertools.combinations(range(n), size):
                idx = list(support)
                x = np.zeros(n)
                if idx:
                    sub = lcp.M[np.ix_(idx, idx)]
                    rhs = -lcp.q[idx]
                    with np.errstate(divide="ignore", invalid="ignore"):
                        cond = np.linalg.cond(sub)
                    if not np.isfinite(cond) or cond > 1e12:
                        degenerate.append(support)
                        # singular block: keep the minimum-norm particular solution when consistent
                        x_sub, *_ = scipy.linalg.lstsq(sub, rhs)
                        if np.linalg.norm(sub @ x_sub - rhs) > tol * (1.0 + np.linalg.norm(rhs)):
                            continue
                    else:
                        x_sub = scipy.linalg.solve(sub, rhs)
                    x[idx] = x_sub
                if np.any(x < -tol):
                    continue
                w = lcp.slack(x)
                if np.any(w < -tol):
                    continue
                x = np.maximum(x, 0.0)
                if any(np.max(np.abs(x - known)) <= 1e-8 for known in solutions):
                    continue
                solutions.append(x)
                supports.append(support)

        if degenerate:
            logger.info(f"Skipped or reduced {len(degenerate)} degenerate supports")
        return EnumerationResult(solutions=solutions, supports=supports, degenerate_supports=degenerate)

    @staticmethod
    def normalize_scale(M) -> Tuple[np.ndarray, float]:
        """(βM, β) with β = 1/‖M‖₂."""
        M = np.asarray(M, dtype=float)
        norm = float(np.linalg.norm(M, 2))
        if norm == 0.0:
            raise ValueError("Cannot normalize the zero matrix")
        beta = 1.0 / norm
        return M * beta, beta

    @staticmethod
    def is_copositive(M, max_depth: Optional[int] = None, tol: float = 1e-8) -> CopositivityVerdict:
        """Copositivity on the nonnegative orthant by simplicial subdivision of the unit simplex.

        On a sub-simplex with vertex matrix V, every point is Vλ with λ in the
        standard simplex, so min_ij (VᵀSV)_ij bounds xᵀMx from below.
        """
        max_depth = Config.COPOSITIVE_DEPTH if max_depth is None else max_depth
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"M must be square, got shape {M.shape}")
        if not np.any(M):
            return CopositivityVerdict("Copositive", lower_bound=0.0)
        normalized, _ = LcpService.normalize_scale(M)
        S = 0.5 * (normalized + normalized.T)
        n = S.shape[0]

        if np.all(S >= -tol) or np.linalg.eigvalsh(S).min() >= -tol:
            return CopositivityVerdict("Copositive", lower_bound=float(min(S.min(), 0.0)))

        stack = [(np.eye(n), 0)]
        nodes = 0
        undecided = False
        while stack:
            V, depth = stack.pop()
            nodes += 1
            Q = V.T @ S @ V

            vertex_values = np.diag(Q)
            k = int(np.argmin(vertex_values))
            if vertex_values[k] < -tol:
                return LcpService._copositivity_witness(M, V[:, k], nodes)
            for i, j in itertools.combinations(range(n), 2):
                if (Q[i, i] + 2.0 * Q[i, j] + Q[j, j]) / 4.0 < -tol:
                    return LcpService._copositivity_witness(M, 0.5 * (V[:, i] + V[:, j]), nodes)

            if Q.min() >= -tol:
                continue
            if depth >= max_depth:
                undecided = True
                continue

            edges = [(np.linalg.norm(V[:, i] - V[:, j]), i, j) for i, j in itertools.combinations(range(n), 2)]
            _, i, j = max(edges)
            midpoint = 0.5 * (V[:, i] + V[:, j])
            left, right = V.copy(), V.copy()
            left[:, j] = midpoint
            right[:, i] = midpoint
            stack.append((right, depth + 1))
            stack.append((left, depth + 1))

        if undecided:
            logger.info(f"Copositivity undecided at depth {max_depth} after {nodes} nodes")
            return CopositivityVerdict("Undecided", nodes=nodes)
        return CopositivityVerdict("Copositive", nodes=nodes)

    @staticmethod
    def _copositivity_witness(M: np.ndarray, x: np.ndarray, nodes: int) -> CopositivityVerdict:
        x = np.maximum(x, 0.0)
        x = x / x.sum()
        return CopositivityVerdict("NotCopositive", witness=x, value=float(x @ M @ x), nodes=nodes)

    @staticmethod
    def is_r0_pair(M, tol: float = 1e-10, max_dim: Optional[int] = None) -> R0Verdict:
        """(ℝⁿ₊, M) is an R0 pair iff CP(ℝⁿ₊, 0, M) has only the zero solution.

        Each complementary support α is tested by an LP feasibility problem on
        the normalized cone slice 1ᵀd = 1.
        """
        M = np.asarray(M, dtype=float)
        n = M.shape[0]
        max_dim = max_dim or Config.ORACLE_MAX_DIM
        if n > max_dim:
            raise OracleSizeError(f"R0 check is limited to n <= {max_dim} (got n={n})")
        if not np.any(M):
            witness = np.zeros(n)
            witness[0] = 1.0
            return R0Verdict("NotR0", witness=witness, support=(0,))
        normalized, _ = LcpService.normalize_scale(M)

        for size in range(1, n + 1):
            for support in itertools.combinations(range(n), size):
                witness = LcpService._r0_support_witness(normalized, list(support), tol)
                if witness is not None:
                    logger.info(f"Found nonzero CP(K, 0, M) solution on support {support}")
                    return R0Verdict("NotR0", witness=witness, support=support)
        return R0Verdict("R0")

    @staticmethod
    def _r0_support_witness(M: np.ndarray, support: List[int], tol: float) -> Optional[np.ndarray]:
        n = M.shape[0]
        rest = [i for i in range(n) if i not in support]
        k = len(support)
        # d_α ≥ 0, M_αα d_α = 0, M_ᾱα d_α ≥ 0, 1ᵀd_α = 1
        a_eq = np.vstack([M[np.ix_(support, support)], np.ones((1, k))])
        b_eq = np.concatenate([np.zeros(k), [1.0]])
        a_ub = -M[np.ix_(rest, support)] if rest else None
        b_ub = np.zeros(len(rest)) if rest else None
        result = linprog(np.zeros(k), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                         bounds=[(0, None)] * k, method="highs")
        if result.status != 0:
            return None
        d = np.zeros(n)
        d[support] = np.maximum(result.x, 0.0)
        d /= d.sum()
        slack = M @ d
        if np.all(slack >= -1e3 * tol - 1e-9) and abs(d @ slack) <= 1e-8:
            return d
        return None
