"""
svicert core commands

The four subcommands of the command-line tool: ``generate`` builds market
instances, ``solve`` runs a solver, ``certify`` checks a solvability
condition and ``oracle`` enumerates a small LCP. Each command returns the
process exit code; reports are written through ReportService.
"""

import argparse
import logging
from typing import Any, Dict, Optional

import numpy as np

from svicert.config import (
    EXIT_DIVERGED,
    EXIT_FAIL,
    EXIT_INCONCLUSIVE,
    EXIT_MAX_ITER,
    EXIT_OK,
    Config,
)
from svicert.models.problem import ModelValidationError, ProblemInstance
from svicert.models.results import CertificateReport, SolverConfig, SolveResult, SolveStatus, Verdict
from svicert.services.certificate_service import CertificateService
from svicert.services.cournot_service import CournotService
from svicert.services.lcp_service import LcpService
from svicert.services.power_market_service import PowerMarketService
from svicert.services.problem_service import ProblemService
from svicert.services.report_service import ReportService
from svicert.services.solver_service import SolverService
from svicert.storage.files import (
    read_cournot_config,
    read_lcp,
    read_power_config,
    read_problem,
    write_problem,
    write_trace,
)
from svicert.utils import format_vector, parse_float_list, parse_vector

logger = logging.getLogger(__name__)

SOLVE_EXIT_CODES = {
    SolveStatus.CONVERGED: EXIT_OK,
    SolveStatus.MAX_ITER: EXIT_MAX_ITER,
    SolveStatus.DIVERGED: EXIT_DIVERGED,
}

VERDICT_EXIT_CODES = {
    Verdict.PASS: EXIT_OK,
    Verdict.FAIL: EXIT_FAIL,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


def _arguments(args: argparse.Namespace) -> Dict[str, Any]:
    """Echo of the parsed arguments, minus the dispatch hook."""
    return {key: value for key, value in sorted(vars(args).items()) if key != "handler"}


def _optional_vector(text: Optional[str], dim: int, name: str) -> Optional[np.ndarray]:
    if text is None:
        return None
    vector = parse_vector(text)
    if vector.size != dim:
        raise ModelValidationError(f"--{name} has {vector.size} entries, problem dimension is {dim}")
    return vector


class CoreCommands:
    """Command handlers for generate / solve / certify / oracle."""

    # ------------------------------------------------------------------
    # generate
    # ------------------------------------------------------------------

    @staticmethod
    def generate(args: argparse.Namespace) -> int:
        """Build a market instance from its config file and write the problem file."""
        if args.model == "cournot":
            config = read_cournot_config(args.config)
            exact, smoothed = CournotService.build_cournot(config)
            problem = smoothed if args.smoothed else exact
        else:
            problem = PowerMarketService.build_power_market(read_power_config(args.config))

        write_problem(args.problem_out, problem)
        manifest = ReportService.build_manifest("generate", args.seed, [args.config, args.problem_out],
                                                _arguments(args))
        result = {
            "model": args.model,
            "problem": args.problem_out,
            "kind": problem.kind,
            "dim": problem.dim,
            "map": "interval" if not problem.map.single_valued else type(problem.map).__name__,
        }
        ReportService.emit("generate", manifest, result, args.out)
        return EXIT_OK

    # ------------------------------------------------------------------
    # solve
    # ------------------------------------------------------------------

    @staticmethod
    def _solver_config(args: argparse.Namespace, problem: ProblemInstance) -> SolverConfig:
        stochastic = args.method == "sa" or not problem.scenario_model.is_finite or args.samples is not None
        default_tol = Config.STOCHASTIC_TOL if stochastic else Config.DETERMINISTIC_TOL
        return SolverConfig(
            tol=args.tol if args.tol is not None else default_tol,
            max_iter=args.max_iter if args.max_iter is not None else Config.DEFAULT_MAX_ITER,
            step=args.step,
            theta=args.theta,
            averaging=not args.no_averaging,
            samples=args.samples,
            seed=args.seed,
            jobs=args.jobs,
        )

    @staticmethod
    def run_solver(problem: ProblemInstance, method: str, config: SolverConfig, x0=None) -> SolveResult:
        """Dispatch ``method`` on ``problem``."""
        if method == "saa":
            return SolverService.saa_solve(problem, config, x0)
        if method == "sa":
            return SolverService.sa_solve(problem, config, x0)
        if method == "erm":
            return SolverService.erm_solve(problem, config, x0)
        if method == "qvi-fp":
            return SolverService.qvi_fixed_point(problem, config, x0)

        averaged, details = ProblemService.freeze_average(problem, config.samples, config.seed)
        start = np.zeros(problem.dim) if x0 is None else x0
        if method == "ssn":
            result = SolverService.ssn_fb_solve(problem, averaged, start, config)
        else:
            if problem.kind == "SQVI":
                raise ModelValidationError("extragradient solves fixed-set problems; use qvi-fp for SQVI")
            result = SolverService.extragradient_solve(problem.ground_set, averaged, start, config)
        result.details.update(details)
        return result

    @staticmethod
    def solve(args: argparse.Namespace) -> int:
        """Solve a problem file and report the SolveResult."""
        problem = read_problem(args.problem)
        config = CoreCommands._solver_config(args, problem)
        x0 = _optional_vector(args.x0, problem.dim, "x0")
        result = CoreCommands.run_solver(problem, args.method, config, x0)

        if args.trace:
            write_trace(args.trace, result.trace)
        manifest = ReportService.build_manifest("solve", args.seed, [args.problem], _arguments(args))
        payload = result.to_dict()
        payload["problem"] = {"name": problem.name, "kind": problem.kind, "dim": problem.dim}
        ReportService.emit("solve", manifest, payload, args.out)
        logger.info(f"solve --method {args.method}: {result.status.value}, residual {result.residual:.3e}, "
                    f"x = {format_vector(result.x)}")
        return SOLVE_EXIT_CODES[result.status]

    # ------------------------------------------------------------------
    # certify
    # ------------------------------------------------------------------

    @staticmethod
    def run_certificate(problem: ProblemInstance, args: argparse.Namespace) -> CertificateReport:
        """Dispatch ``args.condition`` on ``problem``."""
        condition = args.condition
        n = problem.dim
        x_ref = _optional_vector(args.xref, n, "xref")
        radii = parse_float_list(args.radii) if args.radii else None
        margin = args.margin if args.margin is not None else Config.CERT_MARGIN
        seed = args.seed

        if condition in ("coercivity", "cartesian", "monotone-coercivity", "multivalued", "scp-growth"):
            directions = [parse_vector(text) for text in args.direction] if args.direction else None
            plan = CertificateService.make_plan(problem, x_ref=x_ref, directions=directions, radii=radii,
                                                scenario_count=args.scenarios, seed=seed)
            if condition == "coercivity":
                return CertificateService.coercivity_certificate(problem, plan, margin, args.jobs)
            if condition == "cartesian":
                if args.block is None:
                    raise ModelValidationError("cartesian coercivity needs --block")
                return CertificateService.cartesian_coercivity_certificate(problem, args.block, plan, margin,
                                                                           jobs=args.jobs)
            if condition == "monotone-coercivity":
                return CertificateService.monotone_coercivity_certificate(problem, plan, margin, args.jobs)
            if condition == "multivalued":
                return CertificateService.multivalued_coercivity_certificate(problem, plan, margin, args.jobs)
            return CertificateService.scp_growth_certificate(problem, plan, args.growth_mode, margin, args.jobs)

        if condition == "lower-bound":
            return CertificateService.lower_bound_certificate(problem, x_ref=x_ref, u=args.u, radii=radii,
                                                              samples=args.samples,
                                                              scenario_count=args.scenarios, seed=seed,
                                                              margin=margin)
        if condition in ("qvi-boundary", "qvi-compact"):
            lower = _optional_vector(args.box_lower, n, "box-lower")
            upper = _optional_vector(args.box_upper, n, "box-upper")
            if lower is None or upper is None:
                raise ModelValidationError(f"{condition} needs --box-lower and --box-upper")
            if condition == "qvi-compact":
                return CertificateService.qvi_compactness_check(problem, lower, upper, seed=seed)
            if x_ref is None:
                raise ModelValidationError("qvi-boundary needs --xref inside the box")
            return CertificateService.qvi_boundary_certificate(problem, lower, upper, x_ref, samples=args.samples,
                                                               scenario_count=args.scenarios, seed=seed,
                                                               margin=margin)
        if condition == "monotone":
            return CertificateService.monotonicity_certificate(problem, pairs=args.pairs, scenario_count=args.scenarios,
                                                               seed=seed)
        if condition == "cocoercive":
            # --xref doubles as the interior-point candidate u
            return CertificateService.cocoercivity_certificate(problem, pairs=args.pairs,
                                                               scenario_count=args.scenarios,
                                                               u_candidate=x_ref, seed=seed, margin=margin)

        tau_grid = parse_float_list(args.tau_grid) if args.tau_grid else None
        config = SolverConfig(seed=seed, samples=args.samples_saa)
        return CertificateService.alternative_witness_search(problem, max_radius=radii[-1] if radii else None,
                                                             tau_grid=tau_grid, config=config)

    @staticmethod
    def certify(args: argparse.Namespace) -> int:
        """Check one solvability condition and report the verdict."""
        problem = read_problem(args.problem)
        report = CoreCommands.run_certificate(problem, args)
        manifest = ReportService.build_manifest("certify", args.seed, [args.problem], _arguments(args))
        ReportService.emit("certify", manifest, report.to_dict(), args.out)
        if report.witness is not None:
            logger.warning(f"Witness: {report.witness}")
        return VERDICT_EXIT_CODES[report.verdict]

    # ------------------------------------------------------------------
    # oracle
    # ------------------------------------------------------------------

    @staticmethod
    def oracle(args: argparse.Namespace) -> int:
        """Enumerate a small LCP and report copositivity / R0 verdicts."""
        lcp = read_lcp(args.lcp)
        enumeration = LcpService.enumerate_lcp_solutions(lcp, tol=args.tol, max_dim=Config.ORACLE_MAX_DIM)
        copositive = LcpService.is_copositive(lcp.M, max_depth=args.max_depth)
        r0 = LcpService.is_r0_pair(lcp.M, max_dim=Config.ORACLE_MAX_DIM)
        lemke = LcpService.lemke_solve(lcp)

        manifest = ReportService.build_manifest("oracle", args.seed, [args.lcp], _arguments(args))
        result = ReportService.oracle_result(lcp, enumeration, copositive, r0, lemke)
        ReportService.emit("oracle", manifest, result, args.out)
        logger.info(f"Oracle: {len(enumeration.solutions)} solution(s), {copositive.status}, {r0.status}")
        return EXIT_OK
