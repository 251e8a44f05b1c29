"""Versioned problem, LCP, market-config and report files."""

import logging
from contextlib import contextmanager
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from svicert.config import (
    COURNOT_CONFIG_FORMAT,
    FORMAT_VERSION,
    LCP_FORMAT,
    POWER_CONFIG_FORMAT,
    PROBLEM_FORMAT,
    REPORT_FORMAT,
)
from svicert.models.markets import CournotConfig, PowerNetworkConfig
from svicert.models.problem import (
    GroundSet,
    IntervalValuedMap,
    MovingSet,
    PiecewiseLinear,
    ProblemInstance,
    RandomAffineMap,
    ScenarioMap,
    ScenarioModel,
    SmoothMap,
    SmoothTerm,
)
from svicert.models.results import LcpInstance, RunManifest
from svicert.storage.codec import (
    ConfigValidationError,
    integer,
    number,
    number_array,
    read_document,
    write_document,
)

logger = logging.getLogger(__name__)


@contextmanager
def _field(name: str):
    """Re-raise model validation failures as ConfigValidationError naming ``name``."""
    try:
        yield
    except ConfigValidationError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigValidationError(name, str(e))
    except KeyError as e:
        raise ConfigValidationError(f"{name}.{e.args[0]}", "missing field")


def _require(document: Dict[str, Any], key: str, path: str) -> Any:
    if not isinstance(document, dict):
        raise ConfigValidationError(path, "expected an object")
    if key not in document:
        raise ConfigValidationError(f"{path}.{key}" if path else key, "missing field")
    return document[key]


def _floats(array) -> List[Any]:
    return np.asarray(array, dtype=float).tolist()


# ---------------------------------------------------------------------------
# Sets and scenario models
# ---------------------------------------------------------------------------

def set_to_dict(ground_set: GroundSet) -> Dict[str, Any]:
    if ground_set.variant == "orthant":
        return {"type": "orthant", "dim": ground_set.dim}
    if ground_set.variant == "box":
        return {"type": "box", "lower": _floats(ground_set.lower), "upper": _floats(ground_set.upper)}
    if ground_set.variant == "cartesian":
        return {"type": "cartesian", "blocks": [set_to_dict(block) for block in ground_set.blocks]}
    return {"type": "mixed", "nonneg_dim": ground_set.nonneg_dim, "free_dim": ground_set.free_dim}


def set_from_dict(document: Dict[str, Any], path: str = "set") -> GroundSet:
    kind = _require(document, "type", path)
    with _field(path):
        if kind == "orthant":
            return GroundSet.orthant(integer(_require(document, "dim", path), f"{path}.dim"))
        if kind == "box":
            return GroundSet.box(number_array(_require(document, "lower", path), f"{path}.lower", 1),
                                 number_array(_require(document, "upper", path), f"{path}.upper", 1))
        if kind == "cartesian":
            blocks = _require(document, "blocks", path)
            if not isinstance(blocks, list):
                raise ConfigValidationError(f"{path}.blocks", "expected a list")
            return GroundSet.cartesian([set_from_dict(block, f"{path}.blocks[{k}]")
                                        for k, block in enumerate(blocks)])
        if kind == "mixed":
            return GroundSet.mixed(integer(_require(document, "nonneg_dim", path), f"{path}.nonneg_dim"),
                                   integer(_require(document, "free_dim", path), f"{path}.free_dim"))
    raise ConfigValidationError(f"{path}.type", f"unknown set type {kind!r}")


def scenarios_to_dict(model: ScenarioModel) -> Dict[str, Any]:
    if model.is_finite:
        return {"type": "finite", "outcomes": _floats(model.outcomes),
                "probabilities": _floats(model.probabilities)}
    coordinates = []
    for family, first, second in model.distributions:
        if family == "uniform":
            coordinates.append({"family": family, "a": first, "b": second})
        else:
            coordinates.append({"family": family, "mean": first, "std": second})
    return {"type": "sampler", "seed": model.seed, "coordinates": coordinates}


def scenarios_from_dict(document: Dict[str, Any], path: str = "scenarios") -> ScenarioModel:
    kind = _require(document, "type", path)
    with _field(path):
        if kind == "finite":
            return ScenarioModel.finite(
                number_array(_require(document, "outcomes", path), f"{path}.outcomes", 2),
                number_array(_require(document, "probabilities", path), f"{path}.probabilities", 1))
        if kind == "sampler":
            coordinates = _require(document, "coordinates", path)
            if not isinstance(coordinates, list):
                raise ConfigValidationError(f"{path}.coordinates", "expected a list")
            specs = []
            for k, coordinate in enumerate(coordinates):
                where = f"{path}.coordinates[{k}]"
                family = _require(coordinate, "family", where)
                if family == "uniform":
                    specs.append((family, number(_require(coordinate, "a", where), f"{where}.a"),
                                  number(_require(coordinate, "b", where), f"{where}.b")))
                elif family == "normal":
                    specs.append((family, number(_require(coordinate, "mean", where), f"{where}.mean"),
                                  number(_require(coordinate, "std", where), f"{where}.std")))
                else:
                    raise ConfigValidationError(f"{where}.family", f"unknown distribution {family!r}")
            return ScenarioModel.sampler(specs, integer(_require(document, "seed", path), f"{path}.seed"))
    raise ConfigValidationError(f"{path}.type", f"unknown scenario model {kind!r}")


# ---------------------------------------------------------------------------
# Maps
# ---------------------------------------------------------------------------

def _factor_to_dict(factor: PiecewiseLinear) -> Dict[str, Any]:
    return {
        "weights": _floats(factor.weights),
        "breakpoints": _floats(factor.breakpoints),
        "intercept": _floats(factor.intercept),
        "slopes": _floats(factor.slopes),
        "smoothing": factor.smoothing,
    }


def _factor_from_dict(document: Dict[str, Any], path: str) -> PiecewiseLinear:
    with _field(path):
        return PiecewiseLinear(
            weights=number_array(_require(document, "weights", path), f"{path}.weights", 1),
            breakpoints=number_array(_require(document, "breakpoints", path), f"{path}.breakpoints", 1),
            intercept=number_array(_require(document, "intercept", path), f"{path}.intercept", 1),
            slopes=number_array(_require(document, "slopes", path), f"{path}.slopes", 2),
            smoothing=number(document.get("smoothing", 0.0), f"{path}.smoothing"),
        )


def _term_to_dict(term: SmoothTerm) -> Dict[str, Any]:
    return {
        "coef": float(term.coef),
        "coef_omega": _floats(term.coef_omega),
        "powers": [[v, p] for v, p in term.powers],
        "factor": _factor_to_dict(term.factor) if term.factor is not None else None,
        "factor_mode": term.factor_mode,
    }


def _term_from_dict(document: Dict[str, Any], path: str) -> SmoothTerm:
    powers = document.get("powers", [])
    if not isinstance(powers, list) or any(not isinstance(p, list) or len(p) != 2 for p in powers):
        raise ConfigValidationError(f"{path}.powers", "expected a list of [variable, power] pairs")
    factor = document.get("factor")
    with _field(path):
        return SmoothTerm(
            coef=number(document.get("coef", 1.0), f"{path}.coef"),
            coef_omega=number_array(document.get("coef_omega", []), f"{path}.coef_omega", 1),
            powers=tuple((integer(v, f"{path}.powers"), integer(p, f"{path}.powers")) for v, p in powers),
            factor=_factor_from_dict(factor, f"{path}.factor") if factor is not None else None,
            factor_mode=document.get("factor_mode", "value"),
        )


def map_to_dict(mapping: ScenarioMap) -> Dict[str, Any]:
    if isinstance(mapping, RandomAffineMap):
        return {
            "type": "affine",
            "M": _floats(mapping.matrix),
            "q": _floats(mapping.offset),
            "M_omega": _floats(mapping.matrix_omega),
            "q_omega": _floats(mapping.offset_omega),
        }
    if isinstance(mapping, SmoothMap):
        return {
            "type": "smooth",
            "dim": mapping.size,
            "selection": mapping.selection,
            "components": [[_term_to_dict(term) for term in terms] for terms in mapping.components],
        }
    if isinstance(mapping, IntervalValuedMap):
        return {"type": "interval", "lower": map_to_dict(mapping.lower_map),
                "upper": map_to_dict(mapping.upper_map)}
    raise TypeError(f"Cannot serialize map of type {type(mapping).__name__}")


def map_from_dict(document: Dict[str, Any], path: str = "map") -> ScenarioMap:
    kind = _require(document, "type", path)
    with _field(path):
        if kind == "affine":
            M = number_array(_require(document, "M", path), f"{path}.M", 2)
            q = number_array(_require(document, "q", path), f"{path}.q", 1)
            M_omega = number_array(document.get("M_omega", []), f"{path}.M_omega", 3)
            q_omega = number_array(document.get("q_omega", []), f"{path}.q_omega", 2)
            return RandomAffineMap(M, q, M_omega if M_omega.size else None, q_omega if q_omega.size else None)
        if kind == "smooth":
            components = _require(document, "components", path)
            if not isinstance(components, list):
                raise ConfigValidationError(f"{path}.components", "expected a list")
            terms = tuple(
                tuple(_term_from_dict(term, f"{path}.components[{i}][{k}]") for k, term in enumerate(row))
                for i, row in enumerate(components)
            )
            return SmoothMap(integer(_require(document, "dim", path), f"{path}.dim"), terms,
                             document.get("selection", "right"))
        if kind == "interval":
            return IntervalValuedMap(map_from_dict(_require(document, "lower", path), f"{path}.lower"),
                                     map_from_dict(_require(document, "upper", path), f"{path}.upper"))
    raise ConfigValidationError(f"{path}.type", f"unknown map type {kind!r}")


def moving_set_to_dict(moving: MovingSet) -> Dict[str, Any]:
    return {
        "lower_base": _floats(moving.lower_base),
        "lower_matrix": _floats(moving.lower_matrix),
        "upper_base": _floats(moving.upper_base),
        "upper_matrix": _floats(moving.upper_matrix),
    }


def moving_set_from_dict(document: Dict[str, Any], path: str = "moving_set") -> MovingSet:
    with _field(path):
        return MovingSet(*(number_array(_require(document, key, path), f"{path}.{key}", ndim)
                           for key, ndim in (("lower_base", 1), ("lower_matrix", 2),
                                             ("upper_base", 1), ("upper_matrix", 2))))


# ---------------------------------------------------------------------------
# Problem and LCP documents
# ---------------------------------------------------------------------------

def problem_to_dict(problem: ProblemInstance) -> Dict[str, Any]:
    return {
        "format": PROBLEM_FORMAT,
        "version": FORMAT_VERSION,
        "name": problem.name,
        "kind": problem.kind,
        "dim": problem.dim,
        "set": set_to_dict(problem.ground_set),
        "moving_set": moving_set_to_dict(problem.moving_set) if problem.moving_set is not None else None,
        "map": map_to_dict(problem.map),
        "scenarios": scenarios_to_dict(problem.scenario_model),
    }


def problem_from_dict(document: Dict[str, Any]) -> ProblemInstance:
    ground_set = set_from_dict(_require(document, "set", ""))
    dim = integer(_require(document, "dim", ""), "dim")
    if dim != ground_set.dim:
        raise ConfigValidationError("dim", f"declared {dim}, set has dimension {ground_set.dim}")
    moving = document.get("moving_set")
    with _field("problem"):
        return ProblemInstance(
            kind=_require(document, "kind", ""),
            ground_set=ground_set,
            map=map_from_dict(_require(document, "map", "")),
            scenario_model=scenarios_from_dict(_require(document, "scenarios", "")),
            moving_set=moving_set_from_dict(moving) if moving is not None else None,
            name=str(document.get("name", "")),
        )


def read_problem(path: str) -> ProblemInstance:
    problem = problem_from_dict(read_document(path, PROBLEM_FORMAT))
    logger.info(f"Loaded {problem.kind} problem {problem.name!r} (n={problem.dim}) from {path}")
    return problem


def write_problem(path: str, problem: ProblemInstance) -> str:
    return write_document(path, problem_to_dict(problem))


def lcp_to_dict(lcp: LcpInstance) -> Dict[str, Any]:
    return {"format": LCP_FORMAT, "version": FORMAT_VERSION, "name": lcp.name,
            "M": _floats(lcp.M), "q": _floats(lcp.q)}


def lcp_from_dict(document: Dict[str, Any]) -> LcpInstance:
    with _field("lcp"):
        return LcpInstance(number_array(_require(document, "M", ""), "M", 2),
                           number_array(_require(document, "q", ""), "q", 1),
                           name=str(document.get("name", "")))


def read_lcp(path: str) -> LcpInstance:
    return lcp_from_dict(read_document(path, LCP_FORMAT))


def write_lcp(path: str, lcp: LcpInstance) -> str:
    return write_document(path, lcp_to_dict(lcp))


# ---------------------------------------------------------------------------
# Market configs
# ---------------------------------------------------------------------------

def cournot_config_to_dict(config: CournotConfig) -> Dict[str, Any]:
    return {
        "format": COURNOT_CONFIG_FORMAT,
        "version": FORMAT_VERSION,
        "firms": config.firms,
        "gamma": _floats(config.gamma),
        "delta": _floats(config.delta),
        "breakpoints": _floats(config.breakpoints),
        "intercept": _floats(config.intercept),
        "slopes": _floats(config.slopes),
        "capacity": float(config.capacity) if config.capacity is not None else None,
        "smoothing": config.smoothing,
        "scenarios": scenarios_to_dict(config.scenarios),
    }


def cournot_config_from_dict(document: Dict[str, Any]) -> CournotConfig:
    capacity = document.get("capacity")
    firms = integer(_require(document, "firms", ""), "firms")
    if firms < 1:
        raise ConfigValidationError("firms", "need at least one firm")
    fields = {
        "gamma": number_array(_require(document, "gamma", ""), "gamma", 1),
        "delta": number_array(_require(document, "delta", ""), "delta", 1),
        "breakpoints": number_array(_require(document, "breakpoints", ""), "breakpoints", 1),
        "intercept": number_array(_require(document, "intercept", ""), "intercept", 1),
        "slopes": number_array(_require(document, "slopes", ""), "slopes", 2),
    }
    scenarios = scenarios_from_dict(_require(document, "scenarios", ""))
    smoothing = number(document.get("smoothing", 0.0), "smoothing")
    capacity = number(capacity, "capacity") if capacity is not None else None

    # point the diagnostic at the field the model complained about
    try:
        return CournotConfig(firms=firms, scenarios=scenarios, capacity=capacity, smoothing=smoothing, **fields)
    except ValueError as e:
        message = str(e)
        for name in ("gamma", "delta", "breakpoints", "intercept", "slopes", "capacity", "smoothing", "firms"):
            if name in message.lower() or (name == "slopes" and "b^j" in message):
                raise ConfigValidationError(name, message)
        if "γ" in message or "δ" in message or "cost" in message.lower():
            raise ConfigValidationError("gamma", message)
        raise ConfigValidationError("config", message)


def power_config_to_dict(config: PowerNetworkConfig) -> Dict[str, Any]:
    return {
        "format": POWER_CONFIG_FORMAT,
        "version": FORMAT_VERSION,
        "nodes": config.nodes,
        "firms": config.firms,
        "link_capacity": _floats(config.link_capacity),
        "pdf": _floats(config.pdf),
        "price_intercept": _floats(config.price_intercept),
        "price_slope": _floats(config.price_slope),
        "cost_quadratic": _floats(config.cost_quadratic),
        "cost_linear": _floats(config.cost_linear),
        "capacity": _floats(config.capacity),
        "scenarios": scenarios_to_dict(config.scenarios),
    }


_POWER_ARRAYS = (("link_capacity", 1), ("pdf", 2), ("price_intercept", 2), ("price_slope", 1),
                 ("cost_quadratic", 2), ("cost_linear", 3), ("capacity", 2))


def power_config_from_dict(document: Dict[str, Any]) -> PowerNetworkConfig:
    nodes = integer(_require(document, "nodes", ""), "nodes")
    firms = integer(_require(document, "firms", ""), "firms")
    if nodes < 1 or firms < 1:
        raise ConfigValidationError("nodes" if nodes < 1 else "firms", "need at least one node and one firm")
    arrays = {}
    for name, ndim in _POWER_ARRAYS:
        value = _require(document, name, "")
        arrays[name] = number_array(value, name, ndim)
    scenarios = scenarios_from_dict(_require(document, "scenarios", ""))
    try:
        return PowerNetworkConfig(nodes=nodes, firms=firms, scenarios=scenarios, **arrays)
    except ValueError as e:
        message = str(e)
        lowered = message.lower()
        for name, _ in _POWER_ARRAYS:
            if name in lowered or name.replace("_", " ") in lowered:
                raise ConfigValidationError(name, message)
        hints = (("t_j", "link_capacity"), ("b_i", "price_slope"), ("a_i", "price_intercept"),
                 ("κ", "cost_quadratic"), ("m(ω)", "cost_linear"), ("generation", "capacity"))
        for hint, name in hints:
            if hint in lowered:
                raise ConfigValidationError(name, message)
        raise ConfigValidationError("config", message)


def read_cournot_config(path: str) -> CournotConfig:
    return cournot_config_from_dict(read_document(path, COURNOT_CONFIG_FORMAT))


def read_power_config(path: str) -> PowerNetworkConfig:
    return power_config_from_dict(read_document(path, POWER_CONFIG_FORMAT))


# ---------------------------------------------------------------------------
# Reports and traces
# ---------------------------------------------------------------------------

def report_document(kind: str, manifest: RunManifest, result: Dict[str, Any]) -> Dict[str, Any]:
    return {"format": REPORT_FORMAT, "version": FORMAT_VERSION, "kind": kind,
            "manifest": manifest.to_dict(), "result": result}


def read_report(path: str) -> Dict[str, Any]:
    return read_document(path, REPORT_FORMAT)


def write_trace(path: str, trace: List[float], label: str = "residual") -> Optional[str]:
    """Residual trace as a two-column CSV."""
    frame = pd.DataFrame({"iteration": np.arange(1, len(trace) + 1), label: np.asarray(trace, dtype=float)})
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(trace)} trace rows to {path}")
    return path
