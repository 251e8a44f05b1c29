import os
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


class Config:
    """Configuration management for svicert runs."""

    # Logging
    LOG_LEVEL: str = os.getenv("SVICERT_LOG_LEVEL", "INFO")
    LOG_FILE: str = os.getenv("SVICERT_LOG_FILE", "")

    # Reproducibility
    DEFAULT_SEED: int = int(os.getenv("SVICERT_SEED", "20130917"))
    DEFAULT_JOBS: int = int(os.getenv("SVICERT_JOBS", "1"))
    RECORD_WALL_CLOCK: bool = _env_bool("SVICERT_RECORD_WALL_CLOCK", "false")

    # Solver tolerances
    DETERMINISTIC_TOL: float = float(os.getenv("SVICERT_DETERMINISTIC_TOL", "1e-8"))
    STOCHASTIC_TOL: float = float(os.getenv("SVICERT_STOCHASTIC_TOL", "1e-4"))
    DEFAULT_MAX_ITER: int = int(os.getenv("SVICERT_MAX_ITER", "10000"))
    DEFAULT_SAA_SAMPLES: int = int(os.getenv("SVICERT_SAA_SAMPLES", "1000"))

    # Certificates
    CERT_MARGIN: float = float(os.getenv("SVICERT_CERT_MARGIN", "1e-6"))
    RAY_R0: float = float(os.getenv("SVICERT_RAY_R0", "1.0"))
    RAY_LEVELS: int = int(os.getenv("SVICERT_RAY_LEVELS", "12"))
    RANDOM_DIRECTIONS: int = int(os.getenv("SVICERT_RANDOM_DIRECTIONS", "8"))
    SCENARIO_DRAWS: int = int(os.getenv("SVICERT_SCENARIO_DRAWS", "64"))

    # LCP kernel
    COPOSITIVE_DEPTH: int = int(os.getenv("SVICERT_COPOSITIVE_DEPTH", "12"))
    ORACLE_MAX_DIM: int = int(os.getenv("SVICERT_ORACLE_MAX_DIM", "12"))

    @classmethod
    def validate(cls) -> bool:
        """Validate that the configured values are usable."""
        if cls.LOG_LEVEL.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            logging.error(f"SVICERT_LOG_LEVEL is not a logging level: {cls.LOG_LEVEL}")
            return False

        if cls.DEFAULT_JOBS < 1:
            logging.error("SVICERT_JOBS must be at least 1")
            return False

        if cls.DETERMINISTIC_TOL <= 0 or cls.STOCHASTIC_TOL <= 0 or cls.CERT_MARGIN <= 0:
            logging.error("Tolerances and margins must be positive")
            return False

        if cls.RAY_R0 <= 0 or cls.RAY_LEVELS < 0:
            logging.error("Ray schedule needs r0 > 0 and a nonnegative level count")
            return False

        if not 1 <= cls.ORACLE_MAX_DIM <= 12:
            logging.error("SVICERT_ORACLE_MAX_DIM must lie in [1, 12]")
            return False

        return True


# File format identifiers
FORMAT_VERSION = 1
PROBLEM_FORMAT = "svicert.problem"
LCP_FORMAT = "svicert.lcp"
REPORT_FORMAT = "svicert.report"
COURNOT_CONFIG_FORMAT = "svicert.cournot-config"
POWER_CONFIG_FORMAT = "svicert.power-config"

# Problem kinds
PROBLEM_KINDS = ["SVI", "SCP", "MixedSCP", "SQVI"]

# Solver methods exposed on the command line
SOLVER_METHODS = ["extragradient", "saa", "sa", "ssn", "erm", "qvi-fp"]

# Certificate conditions exposed on the command line
CERTIFICATE_CONDITIONS = [
    "coercivity",
    "cartesian",
    "monotone-coercivity",
    "lower-bound",
    "multivalued",
    "qvi-boundary",
    "qvi-compact",
    "scp-growth",
    "cocoercive",
    "monotone",
    "alternative",
]

# Market generators
MARKET_MODELS = ["cournot", "power"]

# Process exit codes
EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_MAX_ITER = 3
EXIT_DIVERGED = 4
EXIT_FAIL = 5
EXIT_INCONCLUSIVE = 6

# Residual magnitude treated as divergence
DIVERGENCE_THRESHOLD = 1e12
