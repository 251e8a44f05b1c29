"""Result models: LCP instances and verdicts, solver runs, certificate reports, manifests."""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from svicert.config import Config
from svicert.models.problem import DimensionError, ModelValidationError


@dataclass(frozen=True, eq=False)
class LcpInstance:
    """LCP(q, M): x ≥ 0, Mx + q ≥ 0, xᵀ(Mx + q) = 0."""
    M: np.ndarray
    q: np.ndarray
    name: str = ""

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        q = np.array(self.q, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"M must be square, got shape {M.shape}")
        if q.shape != (M.shape[0],):
            raise DimensionError(f"q has shape {q.shape}, expected ({M.shape[0]},)")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(q))):
            raise ModelValidationError("LCP data must be finite")
        M.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "q", q)

    @property
    def dim(self) -> int:
        return int(self.q.size)

    def slack(self, x) -> np.ndarray:
        return self.M @ x + self.q


@dataclass
class LemkeResult:
    status: str  # Solution, RayTermination, MaxPivots
    x: Optional[np.ndarray]
    pivots: int

    @property
    def solved(self) -> bool:
        return self.status == "Solution"


@dataclass
class EnumerationResult:
    solutions: List[np.ndarray]
    supports: List[Tuple[int, ...]]
    degenerate_supports: List[Tuple[int, ...]] = field(default_factory=list)

    def contains(self, x, tol: float = 1e-7) -> bool:
        return any(np.max(np.abs(np.asarray(x) - s)) <= tol for s in self.solutions)


@dataclass
class CopositivityVerdict:
    status: str  # Copositive, NotCopositive, Undecided
    witness: Optional[np.ndarray] = None
    value: Optional[float] = None
    lower_bound: Optional[float] = None
    nodes: int = 0


@dataclass
class R0Verdict:
    status: str  # R0, NotR0
    witness: Optional[np.ndarray] = None
    support: Optional[Tuple[int, ...]] = None


class SolveStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs shared by the solvers."""
    tol: float = Config.DETERMINISTIC_TOL
    max_iter: int = Config.DEFAULT_MAX_ITER
    step: Optional[float] = None  # extragradient τ; None picks 0.9/L̂ or backtracking
    theta: float = 1.0  # SA step θ/k
    averaging: bool = True
    samples: Optional[int] = None  # None uses exact weights when the model is finite
    mu0: float = 0.1
    mu_stages: int = 8
    seed: int = Config.DEFAULT_SEED
    inner_max_iter: int = 5000
    jobs: int = 1

    def __post_init__(self):
        if self.tol <= 0:
            raise ModelValidationError("tol must be positive")
        if self.max_iter < 1 or self.inner_max_iter < 1:
            raise ModelValidationError("Iteration limits must be at least 1")
        if self.step is not None and self.step <= 0:
            raise ModelValidationError("Step size τ must be positive")
        if self.theta <= 0:
            raise ModelValidationError("SA parameter θ must be positive")
        if self.samples is not None and self.samples < 1:
            raise ModelValidationError("Sample size N must be at least 1")
        if self.mu0 <= 0 or self.mu_stages < 1:
            raise ModelValidationError("Smoothing schedule needs μ0 > 0 and at least one stage")

    def smoothing_schedule(self) -> List[float]:
        """μ_k = μ0 · 2^-k, strictly decreasing."""
        return [self.mu0 * 2.0 ** (-k) for k in range(self.mu_stages)]

    def echo(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SolveResult:
    x: np.ndarray
    residual: float
    iterations: int
    status: SolveStatus
    method: str
    residual_kind: str = "natural"
    trace: List[float] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == SolveStatus.CONVERGED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": [float(v) for v in self.x],
            "residual": float(self.residual),
            "residual_kind": self.residual_kind,
            "iterations": int(self.iterations),
            "status": self.status.value,
            "method": self.method,
            "trace_length": len(self.trace),
            "config": dict(self.config),
            "details": dict(self.details),
        }


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True, eq=False)
class RayPlan:
    """Reference point, directions, radii schedule and scenarios for ray certificates."""
    x_ref: np.ndarray
    directions: np.ndarray
    radii: np.ndarray
    scenarios: np.ndarray
    scenario_weights: Optional[np.ndarray] = None
    seed: int = Config.DEFAULT_SEED

    def __post_init__(self):
        x_ref = np.array(self.x_ref, dtype=float)
        directions = np.array(self.directions, dtype=float)
        radii = np.array(self.radii, dtype=float)
        scenarios = np.array(self.scenarios, dtype=float)
        if directions.ndim != 2 or directions.shape[1] != x_ref.size:
            raise DimensionError("Directions must be rows of the problem dimension")
        if np.any(np.linalg.norm(directions, axis=1) == 0):
            raise ModelValidationError("Ray directions must be nonzero")
        if radii.ndim != 1 or radii.size == 0 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
            raise ModelValidationError("Radii must be positive and strictly increasing")
        if scenarios.ndim != 2 or scenarios.shape[0] == 0:
            raise DimensionError("Scenario draws must be a nonempty 2-d array")
        for name, value in (("x_ref", x_ref), ("directions", directions),
                            ("radii", radii), ("scenarios", scenarios)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def parameters(self) -> Dict[str, Any]:
        return {
            "x_ref": [float(v) for v in self.x_ref],
            "directions": int(self.directions.shape[0]),
            "radii": [float(r) for r in self.radii],
            "scenarios": int(self.scenarios.shape[0]),
            "seed": int(self.seed),
        }


@dataclass
class CertificateReport:
    """Verdict of one solvability condition, with the evidence behind it."""
    condition: str
    verdict: Verdict
    witness: Optional[Dict[str, Any]] = None
    evidence: List[Dict[str, Any]] = field(default_factory=list)
    parameters: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    label: str = "sampled evidence"

    def __post_init__(self):
        if self.verdict == Verdict.FAIL and self.witness is None:
            raise ModelValidationError("FAIL verdicts must carry a witness")
        if self.verdict == Verdict.INCONCLUSIVE and self.witness is not None:
            raise ModelValidationError("INCONCLUSIVE verdicts never carry a witness")

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "condition": self.condition,
            "verdict": self.verdict.value,
            "witness": self.witness,
            "evidence": self.evidence,
            "parameters": self.parameters,
            "notes": list(self.notes),
            "label": self.label,
        }


@dataclass
class RunManifest:
    command: str
    seed: Optional[int]
    version: str
    config_paths: List[str] = field(default_factory=list)
    digests: Dict[str, str] = field(default_factory=dict)
    arguments: Dict[str, Any] = field(default_factory=dict)
    wall_clock: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
