"""Sampled-evidence certificates for the solvability conditions of stochastic VI/CP/QVI problems."""

import logging
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from svicert.config import Config
from svicert.models.problem import (
    AveragedMap,
    GroundSet,
    ModelValidationError,
    MultiValuedMapError,
    ProblemInstance,
    ScenarioModel,
)
from svicert.models.results import CertificateReport, RayPlan, SolverConfig, SolveStatus, Verdict
from svicert.services.lcp_service import LcpService
from svicert.services.problem_service import ProblemService
from svicert.services.solver_service import SolverService
from svicert.utils.helpers import derive_rng, parallel_map

logger = logging.getLogger(__name__)

TAIL_WINDOW = 3
MONOTONE_TOL = 1e-10

UBound = Union[None, float, Callable[[np.ndarray], float]]


def _floats(values) -> List[float]:
    return [float(v) for v in np.ravel(values)]


class CertificateService:
    """Service for certifying solvability conditions on sampled rays, points and scenarios."""

    # ------------------------------------------------------------------
    # Plans
    # ------------------------------------------------------------------

    @staticmethod
    def scenario_set(model: ScenarioModel, count: Optional[int] = None,
                     seed: int = Config.DEFAULT_SEED) -> np.ndarray:
        """All outcomes of a finite model, otherwise ``count`` seeded draws."""
        if model.is_finite:
            return np.array(model.outcomes)
        return model.draw(count or Config.SCENARIO_DRAWS, ProblemService.scenario_rng(model, seed, "certificates"))

    @staticmethod
    def default_directions(ground_set: GroundSet, count: int = Config.RANDOM_DIRECTIONS,
                           seed: int = Config.DEFAULT_SEED, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """Signed axes of the recession cone plus ``count`` random unit directions in it."""
        n = ground_set.dim
        mask = np.ones(n, dtype=bool) if mask is None else mask
        up, down = ground_set.recession_signs()
        up, down = up & mask, down & mask
        directions = []
        for i in range(n):
            if up[i]:
                directions.append(np.eye(n)[i])
            if down[i]:
                directions.append(-np.eye(n)[i])
        if not directions:
            return np.zeros((0, n))

        rng = derive_rng(seed, "directions")
        for _ in range(count):
            d = np.abs(rng.standard_normal(n))
            # free coordinates keep their sign; one-sided ones point into the cone
            signs = np.where(up & down, rng.choice([-1.0, 1.0], n), np.where(up, 1.0, -1.0))
            d = np.where(up | down, d * signs, 0.0)
            norm = np.linalg.norm(d)
            if norm > 0:
                directions.append(d / norm)
        return np.array(directions)

    @staticmethod
    def make_plan(problem: ProblemInstance, x_ref=None, directions=None, radii=None,
                  r0: float = Config.RAY_R0, levels: int = Config.RAY_LEVELS,
                  scenario_count: Optional[int] = None, seed: int = Config.DEFAULT_SEED,
                  random_directions: int = Config.RANDOM_DIRECTIONS) -> RayPlan:
        """RayPlan with defaults: x_ref = Π_K(0), radii r0·2^j for j = 0..levels."""
        ground_set = problem.ground_set
        x_ref = ground_set.project(np.zeros(problem.dim)) if x_ref is None else np.asarray(x_ref, dtype=float)
        if np.linalg.norm(x_ref - ground_set.project(x_ref)) > 1e-10:
            raise ModelValidationError(f"x_ref {x_ref.tolist()} is not in K")
        if directions is None:
            directions = CertificateService.default_directions(ground_set, random_directions, seed)
        else:
            directions = np.atleast_2d(np.asarray(directions, dtype=float))
            norms = np.linalg.norm(directions, axis=1, keepdims=True)
            if np.any(norms == 0):
                raise ModelValidationError("Ray directions must be nonzero")
            directions = directions / norms
        if radii is None:
            radii = r0 * 2.0 ** np.arange(levels + 1)
        scenarios = CertificateService.scenario_set(problem.scenario_model, scenario_count, seed)
        return RayPlan(x_ref=x_ref, directions=directions, radii=radii, scenarios=scenarios, seed=seed)

    # ------------------------------------------------------------------
    # Ray engine
    # ------------------------------------------------------------------

    @staticmethod
    def _inner_inf(problem: ProblemInstance, x: np.ndarray, step: np.ndarray, omega) -> float:
        """inf over w in the image at (x, ω) of wᵀ step."""
        if problem.map.single_valued:
            return float(problem.map.evaluate(x, omega) @ step)
        lower, upper = problem.map.bounds(x, omega)
        return float(np.where(step >= 0, lower * step, upper * step).sum())

    @staticmethod
    def _ray_certificate(condition: str, problem: ProblemInstance, plan: RayPlan,
                         value: Callable[[np.ndarray, np.ndarray, np.ndarray], float],
                         margin: float, jobs: int, cells: Optional[List[Tuple]] = None,
                         extra: Optional[Dict] = None) -> CertificateReport:
        """Apply the tail rule to value(x, step, ω) along every (scenario, direction) cell."""
        parameters = dict(plan.parameters(), margin=margin, **(extra or {}))
        if plan.directions.shape[0] == 0:
            return CertificateReport(condition, Verdict.PASS, parameters=parameters,
                                     notes=["K has a trivial recession cone: condition holds vacuously"])

        if cells is None:
            cells = [(s, d, plan.x_ref) for s in range(plan.scenarios.shape[0])
                     for d in range(plan.directions.shape[0])]

        def evaluate(cell):
            s, d, base = cell[0], cell[1], cell[2]
            omega, direction = plan.scenarios[s], plan.directions[d]
            values = []
            for radius in plan.radii:
                step = radius * direction
                values.append(value(base + step, step, omega))
            return np.array(values)

        results = parallel_map(evaluate, cells, jobs)
        rows = []
        witness = None
        short = plan.radii.size < TAIL_WINDOW
        for cell, values in zip(cells, results):
            tail = values[-TAIL_WINDOW:]
            if short:
                status = "INCONCLUSIVE"
            elif np.any(tail <= -margin):
                status = "FAIL"
            elif tail.min() > margin:
                status = "PASS"
            else:
                status = "INCONCLUSIVE"
            row = {
                "scenario": int(cell[0]),
                "direction": int(cell[1]),
                "tail_min": float(tail.min()),
                "tail_slope_sign": int(np.sign(tail[-1] - tail[0])),
                "status": status,
            }
            if len(cell) > 3:
                row["anchor"] = int(cell[3])
            rows.append(row)

            if status == "FAIL" and witness is None:
                offset = values.size - tail.size
                j = offset + int(np.argmin(tail))
                step = plan.radii[j] * plan.directions[cell[1]]
                witness = {
                    "scenario_index": int(cell[0]),
                    "omega": _floats(plan.scenarios[cell[0]]),
                    "direction_index": int(cell[1]),
                    "direction": _floats(plan.directions[cell[1]]),
                    "radius": float(plan.radii[j]),
                    "point": _floats(cell[2] + step),
                    "value": float(values[j]),
                }

        evidence = pd.DataFrame(rows).sort_values(["scenario", "direction"], kind="stable")
        statuses = evidence["status"]
        if witness is not None:
            verdict = Verdict.FAIL
        elif (statuses == "PASS").all():
            verdict = Verdict.PASS
        else:
            verdict = Verdict.INCONCLUSIVE
        notes = []
        if short:
            notes.append(f"radii schedule shorter than the {TAIL_WINDOW}-radius tail window")

        CertificateService._log_verdict(condition, verdict, witness)
        return CertificateReport(condition, verdict, witness=witness,
                                 evidence=evidence.to_dict("records"), parameters=parameters, notes=notes)

    @staticmethod
    def _log_verdict(condition: str, verdict: Verdict, witness: Optional[Dict]):
        logger.info(f"Certificate {condition}: {verdict.value}")
        if witness is not None:
            logger.warning(f"Certificate {condition} witness: {witness}")

    # ------------------------------------------------------------------
    # Coercivity family
    # ------------------------------------------------------------------

    @staticmethod
    def coercivity_certificate(problem: ProblemInstance, plan: RayPlan,
                               margin: float = Config.CERT_MARGIN, jobs: int = 1) -> CertificateReport:
        """Tail rule on F(x_ref + r d; ω)ᵀ(r d)."""
        if not problem.map.single_valued:
            raise MultiValuedMapError("coercivity needs a single-valued map; use the multivalued certificate")
        return CertificateService._ray_certificate(
            "coercivity", problem, plan,
            lambda x, step, omega: float(problem.map.evaluate(x, omega) @ step), margin, jobs)

    @staticmethod
    def cartesian_coercivity_certificate(problem: ProblemInstance, block: int, plan: RayPlan,
                                         margin: float = Config.CERT_MARGIN, anchors: int = 3,
                                         jobs: int = 1) -> CertificateReport:
        """Per-block tail rule on F_ν(x; ω)ᵀ(x_ν - x_ref,ν) with the other blocks at anchor points."""
        ground_set = problem.ground_set
        if ground_set.variant != "cartesian":
            raise ModelValidationError("cartesian coercivity needs a Cartesian ground set")
        slices = ground_set.block_slices()
        if not 0 <= block < len(slices):
            raise ModelValidationError(f"Block index {block} out of range (0..{len(slices) - 1})")
        part = slices[block]
        mask = np.zeros(problem.dim, dtype=bool)
        mask[part] = True

        directions = plan.directions * mask
        norms = np.linalg.norm(directions, axis=1)
        directions = directions[norms > 0] / norms[norms > 0, None]
        if directions.shape[0] == 0:
            directions = CertificateService.default_directions(ground_set, seed=plan.seed, mask=mask)
        block_plan = replace(plan, directions=directions) if directions.shape[0] else replace(
            plan, directions=np.zeros((0, problem.dim)))

        rng = derive_rng(plan.seed, "anchors", block)
        bases = [plan.x_ref]
        for _ in range(anchors):
            anchor = ground_set.project(plan.x_ref + rng.standard_normal(problem.dim))
            anchor[part] = plan.x_ref[part]
            bases.append(anchor)
        cells = [(s, d, bases[a], a) for s in range(plan.scenarios.shape[0])
                 for a in range(len(bases)) for d in range(block_plan.directions.shape[0])]

        def value(x, step, omega):
            return float(problem.map.evaluate(x, omega)[part] @ step[part])

        return CertificateService._ray_certificate("cartesian", problem, block_plan, value, margin, jobs,
                                                   cells=cells, extra={"block": block, "anchors": anchors})

    @staticmethod
    def monotone_coercivity_certificate(problem: ProblemInstance, plan: RayPlan,
                                        margin: float = Config.CERT_MARGIN, jobs: int = 1) -> CertificateReport:
        """Tail rule on F(x_ref; ω)ᵀ(r d), linear in r."""
        if not problem.map.single_valued:
            raise MultiValuedMapError("monotone coercivity needs a single-valued map")
        anchors = {}

        def value(x, step, omega):
            key = tuple(omega)
            if key not in anchors:
                anchors[key] = problem.map.evaluate(plan.x_ref, omega)
            return float(anchors[key] @ step)

        return CertificateService._ray_certificate("monotone-coercivity", problem, plan, value, margin, jobs)

    @staticmethod
    def multivalued_coercivity_certificate(problem: ProblemInstance, plan: RayPlan,
                                           margin: float = Config.CERT_MARGIN, jobs: int = 1) -> CertificateReport:
        """Tail rule on inf over the interval image of wᵀ(x - x_ref)."""
        return CertificateService._ray_certificate(
            "multivalued", problem, plan,
            lambda x, step, omega: CertificateService._inner_inf(problem, x, step, omega), margin, jobs)

    @staticmethod
    def scp_growth_certificate(problem: ProblemInstance, plan: RayPlan, mode: str = "componentwise",
                               margin: float = Config.CERT_MARGIN, jobs: int = 1) -> CertificateReport:
        """Growth of H along rays in the nonnegative block: min_i H_i (componentwise) or xᵀH (inner)."""
        if not problem.ground_set.is_cone:
            raise ModelValidationError("scp-growth needs an orthant or mixed-partition cone")
        if mode not in ("componentwise", "inner"):
            raise ValueError(f"Unknown scp-growth mode {mode!r}")
        nonneg = problem.ground_set.nonneg_mask()

        directions = plan.directions * nonneg
        norms = np.linalg.norm(directions, axis=1)
        directions = directions[norms > 0] / norms[norms > 0, None]
        x_ref = np.where(nonneg, plan.x_ref, 0.0)
        ray_plan = replace(plan, directions=directions if directions.shape[0] else np.zeros((0, problem.dim)),
                           x_ref=x_ref)

        def value(x, step, omega):
            H = problem.map.evaluate(x, omega)[nonneg]
            if mode == "componentwise":
                return float(H.min())
            return float(x[nonneg] @ H)

        return CertificateService._ray_certificate("scp-growth", problem, ray_plan, value, margin, jobs,
                                                   extra={"mode": mode})

    @staticmethod
    def copositive_r0_matrix(n: int) -> Tuple[np.ndarray, Dict[str, str]]:
        """Copositive R0 matrix for the inner-product growth condition (the identity), validated."""
        matrix = np.eye(n)
        verdicts = {
            "copositive": LcpService.is_copositive(matrix).status,
            "r0": LcpService.is_r0_pair(matrix).status,
        }
        if verdicts != {"copositive": "Copositive", "r0": "R0"}:
            raise ModelValidationError(f"Identity failed validation: {verdicts}")
        return matrix, verdicts

    # ------------------------------------------------------------------
    # Lower bound
    # ------------------------------------------------------------------

    @staticmethod
    def _sample_box(center: np.ndarray, radius: float, count: int, ground_set: GroundSet,
                    rng: np.random.Generator) -> np.ndarray:
        points = center + radius * rng.uniform(-1.0, 1.0, (count, center.size))
        return np.clip(points, ground_set.lower, ground_set.upper)

    @staticmethod
    def lower_bound_certificate(problem: ProblemInstance, x_ref=None, u: UBound = None,
                                radii: Optional[Sequence[float]] = None, samples: int = 200,
                                scenario_count: Optional[int] = None, seed: int = Config.DEFAULT_SEED,
                                points: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None,
                                margin: float = Config.CERT_MARGIN) -> CertificateReport:
        """G(x; ω) = inf wᵀ(x - x_ref) ≥ -u(ω) on sampled points; ``u=None`` reports the lower envelope."""
        ground_set = problem.ground_set
        x_ref = ground_set.project(np.zeros(problem.dim)) if x_ref is None else np.asarray(x_ref, dtype=float)
        radii = np.asarray(Config.RAY_R0 * 2.0 ** np.arange(Config.RAY_LEVELS + 1) if radii is None else radii)
        scenarios = CertificateService.scenario_set(problem.scenario_model, scenario_count, seed)
        rng = derive_rng(seed, "lower-bound")

        if points is not None:
            shells = [np.asarray(points(rng, samples), dtype=float)]
        else:
            shells = [CertificateService._sample_box(x_ref, r, samples, ground_set, rng) for r in radii]

        def G(x, omega):
            return CertificateService._inner_inf(problem, x, x - x_ref, omega)

        parameters = {"x_ref": _floats(x_ref), "samples": samples, "shells": len(shells),
                      "scenarios": int(scenarios.shape[0]), "seed": int(seed), "margin": margin,
                      "u": "auto" if u is None else ("constant" if np.isscalar(u) else "callable")}
        rows = []
        witness = None

        if u is not None:
            bound = (lambda omega: float(u)) if np.isscalar(u) else u
            for s, omega in enumerate(scenarios):
                floor = -bound(omega)
                lowest = np.inf
                for shell_index, shell in enumerate(shells):
                    for x in shell:
                        g = G(x, omega)
                        lowest = min(lowest, g)
                        if g < floor - margin and witness is None:
                            witness = {"scenario_index": s, "omega": _floats(omega), "point": _floats(x),
                                       "value": g, "bound": floor, "shell": shell_index}
                rows.append({"scenario": s, "min_value": lowest, "bound": floor,
                             "status": "PASS" if lowest >= floor - margin else "FAIL"})
            verdict = Verdict.FAIL if witness else Verdict.PASS
            notes = []
        else:
            envelopes = []
            for s, omega in enumerate(scenarios):
                minima, arg = [], []
                for shell in shells:
                    values = np.array([G(x, omega) for x in shell])
                    k = int(np.argmin(values))
                    minima.append(values[k])
                    arg.append(shell[k])
                minima = np.array(minima)
                envelopes.append(minima.min())
                tail, head = minima[-TAIL_WINDOW:], minima[:-TAIL_WINDOW]
                if minima.size <= TAIL_WINDOW:
                    status = "INCONCLUSIVE"
                elif np.all(np.diff(tail) < -margin):
                    status = "FAIL"
                    if witness is None:
                        witness = {"scenario_index": s, "omega": _floats(omega), "point": _floats(arg[-1]),
                                   "value": float(minima[-1]), "shell_minima": _floats(tail)}
                elif np.isfinite(minima).all() and tail.min() >= head.min() - margin:
                    # the envelope has settled: no tail shell goes below the earlier shells
                    status = "PASS"
                else:
                    status = "INCONCLUSIVE"
                rows.append({"scenario": s, "min_value": float(minima.min()), "bound": None, "status": status})
            statuses = [row["status"] for row in rows]
            if witness is not None:
                verdict = Verdict.FAIL
            elif all(status == "PASS" for status in statuses):
                verdict = Verdict.PASS
            else:
                verdict = Verdict.INCONCLUSIVE
            parameters["envelope_mean"] = float(np.mean(envelopes))
            notes = ["u(ω) estimated as minus the empirical lower envelope over the sampled shells"]

        CertificateService._log_verdict("lower-bound", verdict, witness)
        return CertificateReport("lower-bound", verdict, witness=witness,
                                 evidence=pd.DataFrame(rows).to_dict("records"),
                                 parameters=parameters, notes=notes)

    # ------------------------------------------------------------------
    # Moving-set conditions
    # ------------------------------------------------------------------

    @staticmethod
    def qvi_boundary_certificate(problem: ProblemInstance, box_lower, box_upper, x_ref,
                                 samples: int = 256, scenario_count: Optional[int] = None,
                                 seed: int = Config.DEFAULT_SEED,
                                 margin: float = Config.CERT_MARGIN) -> CertificateReport:
        """(x - x_ref)ᵀF(x; ω) ≥ -margin on sampled points of bd(U) with x ∈ K(x)."""
        if problem.kind != "SQVI":
            raise ModelValidationError("qvi-boundary needs an SQVI problem")
        lower = np.asarray(box_lower, dtype=float)
        upper = np.asarray(box_upper, dtype=float)
        x_ref = np.asarray(x_ref, dtype=float)
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ModelValidationError("U must be a bounded box")
        if not (np.all(lower < x_ref) and np.all(x_ref < upper)):
            raise ModelValidationError(f"x_ref {x_ref.tolist()} is not interior to U")

        n = problem.dim
        rng = derive_rng(seed, "qvi-boundary")
        per_face = max(1, samples // (2 * n))
        boundary = []
        for i in range(n):
            for side in (lower[i], upper[i]):
                face = lower + rng.random((per_face, n)) * (upper - lower)
                face[:, i] = side
                boundary.append(face)
        boundary = np.vstack(boundary)
        feasible = [x for x in boundary if problem.moving_set.contains(x)]
        scenarios = CertificateService.scenario_set(problem.scenario_model, scenario_count, seed)
        parameters = {"x_ref": _floats(x_ref), "box_lower": _floats(lower), "box_upper": _floats(upper),
                      "boundary_points": int(boundary.shape[0]), "feasible_points": len(feasible),
                      "scenarios": int(scenarios.shape[0]), "seed": int(seed), "margin": margin}

        if not feasible:
            logger.info("No boundary point of U lies in its own feasible set")
            return CertificateReport("qvi-boundary", Verdict.PASS, parameters=parameters,
                                     evidence=[{"vacuous": True}],
                                     notes=["no x on bd(U) satisfies x ∈ K(x): condition holds vacuously"])

        rows = []
        witness = None
        for s, omega in enumerate(scenarios):
            values = np.array([CertificateService._inner_inf(problem, x, x - x_ref, omega) for x in feasible])
            k = int(np.argmin(values))
            if values[k] < -margin and witness is None:
                witness = {"scenario_index": s, "omega": _floats(omega), "point": _floats(feasible[k]),
                           "value": float(values[k])}
            rows.append({"scenario": s, "min_value": float(values[k]),
                         "status": "FAIL" if values[k] < -margin else "PASS", "vacuous": False})
        verdict = Verdict.FAIL if witness else Verdict.PASS
        CertificateService._log_verdict("qvi-boundary", verdict, witness)
        return CertificateReport("qvi-boundary", verdict, witness=witness,
                                 evidence=pd.DataFrame(rows).to_dict("records"), parameters=parameters)

    @staticmethod
    def qvi_compactness_check(problem: ProblemInstance, gamma_lower, gamma_upper, points: int = 128,
                              image_samples: int = 8, seed: int = Config.DEFAULT_SEED) -> CertificateReport:
        """K(x) ⊆ Γ for sampled x ∈ Γ (corners of Γ and of each K(x) included)."""
        if problem.kind != "SQVI":
            raise ModelValidationError("qvi-compact needs an SQVI problem")
        lower = np.asarray(gamma_lower, dtype=float)
        upper = np.asarray(gamma_upper, dtype=float)
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))) or np.any(lower > upper):
            raise ModelValidationError("Γ must be a bounded nonempty box")
        n = problem.dim
        moving = problem.moving_set
        rng = derive_rng(seed, "qvi-compact")

        corners = np.array(np.meshgrid(*zip(lower, upper), indexing="ij")).reshape(n, -1).T
        test_points = np.vstack([corners, lower + rng.random((points, n)) * (upper - lower)])
        scale = float(np.max(upper - lower)) + 1.0

        empty = 0
        witness = None
        for index, x in enumerate(test_points):
            lo, hi = moving.bounds_at(x)
            if np.any(lo > hi):
                empty += 1
                continue
            if np.any(np.isinf(lo)) or np.any(np.isinf(hi)):
                image = moving.sample_image(x, image_samples, rng, radius=10.0 * scale)
                escape = image[np.argmax(np.max(np.maximum(lower - image, image - upper), axis=1))]
                witness = {"x": _floats(x), "point": _floats(escape), "point_index": index, "unbounded_image": True}
                break
            image_corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(n, -1).T
            image = np.vstack([image_corners, moving.sample_image(x, image_samples, rng)])
            outside = np.any(image < lower - 1e-12, axis=1) | np.any(image > upper + 1e-12, axis=1)
            if outside.any():
                witness = {"x": _floats(x), "point": _floats(image[int(np.argmax(outside))]), "point_index": index,
                           "unbounded_image": False}
                break

        parameters = {"gamma_lower": _floats(lower), "gamma_upper": _floats(upper), "points": int(test_points.shape[0]),
                      "seed": int(seed)}
        evidence = [{"points": int(test_points.shape[0]), "empty_images": empty}]
        verdict = Verdict.FAIL if witness else Verdict.PASS
        CertificateService._log_verdict("qvi-compact", verdict, witness)
        return CertificateReport("qvi-compact", verdict, witness=witness, evidence=evidence, parameters=parameters)

    # ------------------------------------------------------------------
    # Pair conditions
    # ------------------------------------------------------------------

    @staticmethod
    def _sample_pairs(ground_set: GroundSet, count: int, rng: np.random.Generator,
                      radius: float = 10.0) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.where(np.isfinite(ground_set.lower), ground_set.lower, -radius)
        hi = np.where(np.isfinite(ground_set.upper), ground_set.upper, np.maximum(lo, 0.0) + radius)
        xs = lo + rng.random((count, ground_set.dim)) * (hi - lo)
        ys = lo + rng.random((count, ground_set.dim)) * (hi - lo)
        return xs, ys

    @staticmethod
    def monotonicity_certificate(problem: ProblemInstance, pairs: int = 500, scenario_count: Optional[int] = None,
                                 seed: int = Config.DEFAULT_SEED) -> CertificateReport:
        """(F(x; ω) - F(y; ω))ᵀ(x - y) ≥ -1e-10 on sampled pairs."""
        if not problem.map.single_valued:
            raise MultiValuedMapError("monotonicity check needs a single-valued map")
        scenarios = CertificateService.scenario_set(problem.scenario_model, scenario_count, seed)
        xs, ys = CertificateService._sample_pairs(problem.ground_set, pairs, derive_rng(seed, "monotone"))
        rows = []
        witness = None
        for s, omega in enumerate(scenarios):
            lowest = np.inf
            for k, (x, y) in enumerate(zip(xs, ys)):
                product = float((problem.map.evaluate(x, omega) - problem.map.evaluate(y, omega)) @ (x - y))
                lowest = min(lowest, product)
                if product < -MONOTONE_TOL and witness is None:
                    witness = {"scenario_index": s, "omega": _floats(omega), "x": _floats(x), "y": _floats(y),
                               "value": product}
            rows.append({"scenario": s, "min_product": lowest,
                         "status": "FAIL" if lowest < -MONOTONE_TOL else "PASS"})
        verdict = Verdict.FAIL if witness else Verdict.PASS
        CertificateService._log_verdict("monotone", verdict, witness)
        return CertificateReport("monotone", verdict, witness=witness,
                                 evidence=pd.DataFrame(rows).to_dict("records"),
                                 parameters={"pairs": pairs, "scenarios": int(scenarios.shape[0]), "seed": int(seed)},
                                 notes=["sampled pairs only: a PASS is evidence, not a proof of monotonicity"])

    @staticmethod
    def cocoercivity_certificate(problem: ProblemInstance, pairs: int = 500, scenario_count: Optional[int] = None,
                                 u_candidate=None, seed: int = Config.DEFAULT_SEED,
                                 margin: float = Config.CERT_MARGIN) -> CertificateReport:
        """Empirical co-coercivity modulus plus H(u; ω) ∈ int(K*) at a candidate u."""
        if not problem.map.single_valued:
            raise MultiValuedMapError("co-coercivity needs a single-valued map")
        scenarios = CertificateService.scenario_set(problem.scenario_model, scenario_count, seed)
        xs, ys = CertificateService._sample_pairs(problem.ground_set, pairs, derive_rng(seed, "cocoercive"))
        rows = []
        witness = None
        eta = np.inf
        notes = []
        for s, omega in enumerate(scenarios):
            lowest = np.inf
            for x, y in zip(xs, ys):
                diff = problem.map.evaluate(x, omega) - problem.map.evaluate(y, omega)
                denominator = float(diff @ diff)
                if denominator <= 1e-12:
                    continue
                ratio = float(diff @ (x - y)) / denominator
                lowest = min(lowest, ratio)
                if ratio < margin and witness is None:
                    witness = {"part": "ratio", "scenario_index": s, "omega": _floats(omega),
                               "x": _floats(x), "y": _floats(y), "value": ratio}
            eta = min(eta, lowest)
            rows.append({"scenario": s, "min_ratio": lowest, "interior": None})

        if u_candidate is not None:
            u = np.asarray(u_candidate, dtype=float)
            if problem.ground_set.variant != "orthant":
                notes.append("interior check skipped: int(K*) is empty unless K is the nonnegative orthant")
            else:
                for s, omega in enumerate(scenarios):
                    H = problem.map.evaluate(u, omega)
                    inside = bool(np.all(H > margin))
                    rows[s]["interior"] = inside
                    if not inside and witness is None:
                        witness = {"part": "interior", "scenario_index": s, "omega": _floats(omega),
                                   "u": _floats(u), "value": float(H.min())}

        verdict = Verdict.FAIL if witness else Verdict.PASS
        CertificateService._log_verdict("cocoercive", verdict, witness)
        return CertificateReport("cocoercive", verdict, witness=witness,
                                 evidence=pd.DataFrame(rows).to_dict("records"),
                                 parameters={"pairs": pairs, "scenarios": int(scenarios.shape[0]), "seed": int(seed),
                                             "margin": margin, "eta_hat": float(eta),
                                             "u_candidate": None if u_candidate is None else _floats(u_candidate)},
                                 notes=notes)

    # ------------------------------------------------------------------
    # Alternative
    # ------------------------------------------------------------------

    @staticmethod
    def alternative_witness_search(problem: ProblemInstance, max_radius: Optional[float] = None,
                                   tau_grid: Optional[Sequence[float]] = None,
                                   config: SolverConfig = SolverConfig()) -> CertificateReport:
        """Solve CP(K, H̄ + τI) down a decreasing τ grid and watch the solution norms."""
        if problem.kind != "SCP":
            raise ModelValidationError("alternative witness search needs an orthant SCP")
        max_radius = Config.RAY_R0 * 2.0 ** Config.RAY_LEVELS if max_radius is None else max_radius
        tau_grid = np.logspace(0, -6, 7) if tau_grid is None else np.asarray(tau_grid, dtype=float)
        if np.any(np.diff(tau_grid) >= 0) or np.any(tau_grid <= 0):
            raise ModelValidationError("τ grid must be positive and strictly decreasing")
        averaged, _ = ProblemService.freeze_average(problem, config.samples, config.seed)

        x = np.zeros(problem.dim)
        rows = []
        witness = None
        failures = 0
        for tau in tau_grid:
            result = SolverService.ssn_fb_solve(problem, averaged.regularized(float(tau)), x, config)
            norm = float(np.linalg.norm(result.x))
            rows.append({"tau": float(tau), "norm": norm, "status": result.status.value,
                         "residual": float(result.residual)})
            if result.status != SolveStatus.CONVERGED:
                failures += 1
                logger.info(f"Inner solve at tau={tau:.3g} ended {result.status.value}")
                continue
            x = result.x
            if norm > max_radius and witness is None:
                witness = {"tau": float(tau), "norm": norm, "x": _floats(result.x),
                           "trajectory": [row["norm"] for row in rows]}
                break

        if witness is not None:
            verdict = Verdict.FAIL
        elif failures:
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.PASS
        CertificateService._log_verdict("alternative", verdict, witness)
        return CertificateReport("alternative", verdict, witness=witness, evidence=rows,
                                 parameters={"max_radius": float(max_radius), "tau_grid": _floats(tau_grid)},
                                 notes=[f"{failures} inner solves did not converge"] if failures else [])
