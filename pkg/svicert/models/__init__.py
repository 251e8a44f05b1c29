"""Domain models for svicert."""

from svicert.models.problem import (
    AveragedMap,
    DimensionError,
    ExpectationEstimate,
    GroundSet,
    IntervalValuedMap,
    ModelValidationError,
    MovingSet,
    MultiValuedMapError,
    PiecewiseLinear,
    ProblemInstance,
    RandomAffineMap,
    ScenarioMap,
    ScenarioModel,
    SmoothMap,
    SmoothTerm,
)
from svicert.models.results import (
    CertificateReport,
    CopositivityVerdict,
    EnumerationResult,
    LcpInstance,
    LemkeResult,
    R0Verdict,
    RayPlan,
    RunManifest,
    SolverConfig,
    SolveResult,
    SolveStatus,
    Verdict,
)
from svicert.models.markets import CournotConfig, EquilibriumReport, PowerNetworkConfig

__all__ = [
    "AveragedMap", "DimensionError", "ExpectationEstimate", "GroundSet", "IntervalValuedMap",
    "ModelValidationError", "MovingSet", "MultiValuedMapError", "PiecewiseLinear",
    "ProblemInstance", "RandomAffineMap", "ScenarioMap", "ScenarioModel", "SmoothMap",
    "SmoothTerm", "CertificateReport", "CopositivityVerdict", "EnumerationResult",
    "LcpInstance", "LemkeResult", "R0Verdict", "RayPlan", "RunManifest", "SolverConfig",
    "SolveResult", "SolveStatus", "Verdict", "CournotConfig", "EquilibriumReport",
    "PowerNetworkConfig",
]
