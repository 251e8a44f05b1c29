"""svicert command-line entry point."""

import argparse
import logging
import sys
from typing import List, Optional

from svicert import __version__
from svicert.commands.core import CoreCommands
from svicert.config import (
    CERTIFICATE_CONDITIONS,
    EXIT_INPUT_ERROR,
    MARKET_MODELS,
    SOLVER_METHODS,
    Config,
)
from svicert.models.problem import MultiValuedMapError
from svicert.services.lcp_service import OracleSizeError
from svicert.storage.codec import ConfigValidationError

logger = logging.getLogger(__name__)


def setup_logging(level: str, log_file: Optional[str] = None):
    """Configure logging to stderr (stdout carries reports) plus an optional file."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svicert",
        description="Stochastic variational inequality solvers and solvability certificates.",
    )
    parser.add_argument("--version", action="version", version=f"svicert {__version__}")
    parser.add_argument("--seed", type=int, default=Config.DEFAULT_SEED, help="master seed for every subsystem")
    parser.add_argument("--jobs", type=int, default=Config.DEFAULT_JOBS, help="worker cap")
    parser.add_argument("--out", default=None, help="report path (default: stdout)")
    parser.add_argument("--format", choices=["json"], default="json", help="report format")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL)
    parser.add_argument("--log-file", default=Config.LOG_FILE or None)
    subparsers = parser.add_subparsers(dest="command", required=True)

    # generate
    generate = subparsers.add_parser("generate", help="build a market instance from a config file")
    generate.add_argument("--model", choices=MARKET_MODELS, required=True)
    generate.add_argument("--config", required=True, help="market config file")
    generate.add_argument("--problem-out", required=True, help="problem file to write")
    generate.add_argument("--smoothed", action="store_true", help="cournot: write the smoothed instance")
    generate.set_defaults(handler=CoreCommands.generate)

    # solve
    solve = subparsers.add_parser("solve", help="solve a problem file")
    solve.add_argument("problem", help="problem file")
    solve.add_argument("--method", choices=SOLVER_METHODS, required=True)
    solve.add_argument("--samples", type=int, default=None, help="sample size N (default: exact weights)")
    solve.add_argument("--tol", type=float, default=None)
    solve.add_argument("--max-iter", type=int, default=None)
    solve.add_argument("--step", type=float, default=None, help="extragradient step τ")
    solve.add_argument("--theta", type=float, default=1.0, help="SA step θ/k")
    solve.add_argument("--no-averaging", action="store_true", help="SA: return the last iterate")
    solve.add_argument("--x0", default=None, help="starting point, comma separated")
    solve.add_argument("--trace", default=None, help="write the residual trace CSV here")
    solve.set_defaults(handler=CoreCommands.solve)

    # certify
    certify = subparsers.add_parser("certify", help="check a solvability condition")
    certify.add_argument("problem", help="problem file")
    certify.add_argument("--condition", choices=CERTIFICATE_CONDITIONS, required=True)
    certify.add_argument("--xref", default=None, help="reference point (cocoercive: candidate u)")
    certify.add_argument("--radii", default=None, help="comma separated increasing radii")
    certify.add_argument("--scenarios", type=int, default=None, help="draws for sampler models")
    certify.add_argument("--direction", action="append", default=None, help="ray direction; repeatable")
    certify.add_argument("--block", type=int, default=None, help="cartesian: block index")
    certify.add_argument("--growth-mode", choices=["componentwise", "inner"], default="componentwise")
    certify.add_argument("--u", type=float, default=None, help="lower-bound: constant u(ω)")
    certify.add_argument("--samples", type=int, default=256, help="points per shell / box")
    certify.add_argument("--pairs", type=int, default=500, help="monotone/cocoercive: sampled pairs")
    certify.add_argument("--box-lower", default=None)
    certify.add_argument("--box-upper", default=None)
    certify.add_argument("--tau-grid", default=None, help="alternative: decreasing τ values")
    certify.add_argument("--samples-saa", type=int, default=None, help="alternative: averaged-map sample size")
    certify.add_argument("--margin", type=float, default=None)
    certify.set_defaults(handler=CoreCommands.certify)

    # oracle
    oracle = subparsers.add_parser("oracle", help="enumerate a small LCP")
    oracle.add_argument("lcp", help="LCP file")
    oracle.add_argument("--max-depth", type=int, default=Config.COPOSITIVE_DEPTH)
    oracle.add_argument("--tol", type=float, default=1e-9)
    oracle.set_defaults(handler=CoreCommands.oracle)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, args.log_file)

    if not Config.validate():
        logger.error("Configuration validation failed")
        return EXIT_INPUT_ERROR
    if args.jobs < 1:
        logger.error("--jobs must be at least 1")
        return EXIT_INPUT_ERROR

    try:
        return args.handler(args)
    except ConfigValidationError as e:
        logger.error(f"Invalid input: field '{e.field}': {e.message}")
        return EXIT_INPUT_ERROR
    except OracleSizeError as e:
        logger.error(f"Size limit: {e}")
        return EXIT_INPUT_ERROR
    except (MultiValuedMapError, ValueError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INPUT_ERROR
    except OSError as e:
        logger.error(f"Cannot access file: {e}")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
