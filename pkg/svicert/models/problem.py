"""Problem models: feasible sets, scenario spaces, scenario-based maps and instances."""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Breakpoint snap tolerance for piecewise-linear pieces
SNAP_TOL = 1e-12


class ModelValidationError(ValueError):
    """Raised when a model violates one of its construction invariants."""


class DimensionError(ValueError):
    """Raised when vector or matrix dimensions do not line up."""


class MultiValuedMapError(ValueError):
    """Raised when a single-valued evaluation is requested from an interval-valued map."""


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise DimensionError(f"{name} must have {ndim} dimension(s), got shape {array.shape}")
    if np.isnan(array).any():
        raise ModelValidationError(f"{name} contains NaN")
    array.setflags(write=False)
    return array


def check_vector(x, dim: int, name: str = "x") -> np.ndarray:
    """Return ``x`` as a float vector of length ``dim`` or raise DimensionError."""
    vector = np.asarray(x, dtype=float)
    if vector.shape != (dim,):
        raise DimensionError(f"{name} has shape {vector.shape}, expected ({dim},)")
    return vector


# ---------------------------------------------------------------------------
# Feasible sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroundSet:
    """Feasible region K.

    Every variant is a product of intervals, so the set is stored through its
    componentwise bounds (entries may be infinite) and projection is clipping.
    """
    variant: str  # orthant, box, cartesian, mixed
    lower: np.ndarray
    upper: np.ndarray
    blocks: Tuple["GroundSet", ...] = ()
    nonneg_dim: int = 0
    free_dim: int = 0

    @classmethod
    def orthant(cls, n: int) -> "GroundSet":
        if n < 1:
            raise ModelValidationError("Orthant dimension must be at least 1")
        return cls("orthant", _frozen(np.zeros(n), 1, "lower"), _frozen(np.full(n, np.inf), 1, "upper"))

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "GroundSet":
        lo = _frozen(lower, 1, "lower")
        hi = _frozen(upper, 1, "upper")
        if lo.shape != hi.shape or lo.size == 0:
            raise DimensionError(f"Box bounds have shapes {lo.shape} and {hi.shape}")
        if np.any(lo > hi):
            bad = int(np.argmax(lo > hi))
            raise ModelValidationError(f"Box requires lower <= upper (component {bad}: {lo[bad]} > {hi[bad]})")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ModelValidationError("Box bounds cannot exclude every real value")
        return cls("box", lo, hi)

    @classmethod
    def cartesian(cls, blocks: Sequence["GroundSet"]) -> "GroundSet":
        blocks = tuple(blocks)
        if not blocks:
            raise ModelValidationError("Cartesian set needs at least one block")
        lo = np.concatenate([block.lower for block in blocks])
        hi = np.concatenate([block.upper for block in blocks])
        return cls("cartesian", _frozen(lo, 1, "lower"), _frozen(hi, 1, "upper"), blocks=blocks)

    @classmethod
    def mixed(cls, nonneg_dim: int, free_dim: int) -> "GroundSet":
        if nonneg_dim < 0 or free_dim < 0 or nonneg_dim + free_dim < 1:
            raise ModelValidationError("Mixed partition needs nonnegative block sizes summing to at least 1")
        lo = np.concatenate([np.zeros(nonneg_dim), np.full(free_dim, -np.inf)])
        hi = np.full(nonneg_dim + free_dim, np.inf)
        return cls("mixed", _frozen(lo, 1, "lower"), _frozen(hi, 1, "upper"),
                   nonneg_dim=nonneg_dim, free_dim=free_dim)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def is_cone(self) -> bool:
        return self.variant in ("orthant", "mixed")

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def project(self, x) -> np.ndarray:
        """Euclidean projection onto the set."""
        return np.clip(check_vector(x, self.dim), self.lower, self.upper)

    def contains(self, x, tol: float = 1e-10) -> bool:
        vector = check_vector(x, self.dim)
        return bool(np.all(vector >= self.lower - tol) and np.all(vector <= self.upper + tol))

    def block_slices(self) -> Tuple[slice, ...]:
        if self.variant != "cartesian":
            return (slice(0, self.dim),)
        slices, start = [], 0
        for block in self.blocks:
            slices.append(slice(start, start + block.dim))
            start += block.dim
        return tuple(slices)

    def nonneg_mask(self) -> np.ndarray:
        """Components constrained to the nonnegative half-line."""
        return (self.lower == 0.0) & np.isinf(self.upper)

    def free_mask(self) -> np.ndarray:
        return np.isinf(self.lower) & np.isinf(self.upper)

    def recession_signs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Masks of coordinates along which the set recedes upward / downward."""
        return np.isinf(self.upper), np.isinf(self.lower)


# ---------------------------------------------------------------------------
# Scenario spaces
# ---------------------------------------------------------------------------

DISTRIBUTION_FAMILIES = ("uniform", "normal")


@dataclass(frozen=True, eq=False)
class ScenarioModel:
    """Probability space: finitely many weighted outcomes or a seeded sampler."""
    variant: str  # finite, sampler
    outcomes: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    probabilities: np.ndarray = field(default_factory=lambda: np.zeros(0))
    distributions: Tuple[Tuple[str, float, float], ...] = ()
    seed: int = 0

    @classmethod
    def finite(cls, outcomes, probabilities) -> "ScenarioModel":
        omega = _frozen(outcomes, 2, "outcomes")
        probs = _frozen(probabilities, 1, "probabilities")
        if omega.shape[0] != probs.size or probs.size == 0:
            raise DimensionError(f"{omega.shape[0]} outcomes but {probs.size} probabilities")
        if np.any(probs < 0):
            raise ModelValidationError("Probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ModelValidationError(f"Probabilities sum to {probs.sum():.17g}, not 1")
        return cls("finite", outcomes=omega, probabilities=probs)

    @classmethod
    def single(cls, omega) -> "ScenarioModel":
        """Degenerate model with one outcome of probability one."""
        return cls.finite([list(np.atleast_1d(omega))], [1.0])

    @classmethod
    def sampler(cls, distributions: Sequence[Tuple[str, float, float]], seed: int) -> "ScenarioModel":
        specs = []
        for index, (family, first, second) in enumerate(distributions):
            family = family.lower()
            if family not in DISTRIBUTION_FAMILIES:
                raise ModelValidationError(f"Coordinate {index}: unknown distribution {family!r}")
            if family == "uniform" and not first <= second:
                raise ModelValidationError(f"Coordinate {index}: uniform needs a <= b")
            if family == "normal" and second < 0:
                raise ModelValidationError(f"Coordinate {index}: normal needs std >= 0")
            specs.append((family, float(first), float(second)))
        if not specs:
            raise ModelValidationError("Sampler needs at least one coordinate")
        return cls("sampler", distributions=tuple(specs), seed=int(seed))

    @property
    def is_finite(self) -> bool:
        return self.variant == "finite"

    @property
    def omega_dim(self) -> int:
        if self.is_finite:
            return int(self.outcomes.shape[1])
        return len(self.distributions)

    def mean(self) -> np.ndarray:
        """Exact mean of ω."""
        if self.is_finite:
            return self.probabilities @ self.outcomes
        return np.array([(a + b) / 2.0 if family == "uniform" else a
                         for family, a, b in self.distributions])

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``count`` outcomes from ``rng``."""
        if count < 1:
            raise ModelValidationError("Sample size must be at least 1")
        if self.is_finite:
            cdf = np.cumsum(self.probabilities)
            index = np.searchsorted(cdf, rng.random(count), side="right")
            return self.outcomes[np.minimum(index, self.outcomes.shape[0] - 1)].copy()

        columns = []
        for family, first, second in self.distributions:
            if family == "uniform":
                columns.append(rng.uniform(first, second, count))
            else:
                columns.append(rng.normal(first, second, count))
        return np.column_stack(columns)


# ---------------------------------------------------------------------------
# Scenario maps
# ---------------------------------------------------------------------------

class ScenarioMap:
    """F(x; ω). Evaluation is a pure function of (x, ω)."""

    single_valued = True

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def omega_dim(self) -> int:
        """Length of ω the map reads (0 when it does not depend on ω)."""
        raise NotImplementedError

    def evaluate(self, x: np.ndarray, omega: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray, omega: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scaled(self, factor: float) -> "ScenarioMap":
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class RandomAffineMap(ScenarioMap):
    """F(x; ω) = M(ω) x + q(ω) with M and q affine in ω."""
    matrix: np.ndarray
    offset: np.ndarray
    matrix_omega: Optional[np.ndarray] = None  # (d, n, n)
    offset_omega: Optional[np.ndarray] = None  # (d, n)

    def __post_init__(self):
        matrix = _frozen(self.matrix, 2, "M")
        offset = _frozen(self.offset, 1, "q")
        n = offset.size
        if matrix.shape != (n, n):
            raise DimensionError(f"M has shape {matrix.shape}, q has length {n}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "offset", offset)

        matrix_omega = np.zeros((0, n, n)) if self.matrix_omega is None else self.matrix_omega
        offset_omega = np.zeros((0, n)) if self.offset_omega is None else self.offset_omega
        matrix_omega = _frozen(np.reshape(matrix_omega, (-1, n, n)), 3, "M_omega")
        offset_omega = _frozen(np.reshape(offset_omega, (-1, n)), 2, "q_omega")
        if matrix_omega.shape[0] and offset_omega.shape[0] and matrix_omega.shape[0] != offset_omega.shape[0]:
            raise DimensionError("M_omega and q_omega read different ω lengths")
        object.__setattr__(self, "matrix_omega", matrix_omega)
        object.__setattr__(self, "offset_omega", offset_omega)

    @property
    def dim(self) -> int:
        return int(self.offset.size)

    @property
    def omega_dim(self) -> int:
        return int(max(self.matrix_omega.shape[0], self.offset_omega.shape[0]))

    def matrix_at(self, omega) -> np.ndarray:
        if self.matrix_omega.shape[0] == 0:
            return self.matrix
        return self.matrix + np.tensordot(np.asarray(omega, dtype=float), self.matrix_omega, axes=1)

    def offset_at(self, omega) -> np.ndarray:
        if self.offset_omega.shape[0] == 0:
            return self.offset
        return self.offset + np.asarray(omega, dtype=float) @ self.offset_omega

    def evaluate(self, x, omega) -> np.ndarray:
        return self.matrix_at(omega) @ x + self.offset_at(omega)

    def jacobian(self, x, omega) -> np.ndarray:
        return np.array(self.matrix_at(omega))

    def scaled(self, factor: float) -> "RandomAffineMap":
        return RandomAffineMap(self.matrix * factor, self.offset * factor,
                               self.matrix_omega * factor, self.offset_omega * factor)


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function of the linear form s = wᵀx.

    Piece j has slope ``slopes[j, 0] + slopes[j, 1:]·ω``; the first piece has
    value ``intercept[0] + intercept[1:]·ω`` at s = 0 and later intercepts
    follow from continuity at the breakpoints. A positive ``smoothing`` ε
    replaces each kink by the C¹ quadratic blend on [β - ε, β + ε].
    """
    weights: np.ndarray
    breakpoints: np.ndarray
    intercept: np.ndarray
    slopes: np.ndarray
    smoothing: float = 0.0

    def __post_init__(self):
        weights = _frozen(self.weights, 1, "weights")
        breakpoints = _frozen(self.breakpoints, 1, "breakpoints")
        intercept = _frozen(np.atleast_1d(self.intercept), 1, "intercept")
        slopes = _frozen(np.reshape(self.slopes, (breakpoints.size + 1, -1)), 2, "slopes")
        if np.any(np.diff(breakpoints) <= 0):
            raise ModelValidationError("Breakpoints must be strictly increasing")
        if slopes.shape[1] != intercept.size:
            raise DimensionError("Slopes and intercept read different ω lengths")
        if self.smoothing < 0:
            raise ModelValidationError("Smoothing width must be nonnegative")
        if breakpoints.size > 1 and 2 * self.smoothing >= np.min(np.diff(breakpoints)):
            raise ModelValidationError("Smoothing windows overlap")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "intercept", intercept)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "smoothing", float(self.smoothing))

    @property
    def omega_dim(self) -> int:
        return int(self.intercept.size - 1)

    def pieces(self, omega) -> Tuple[np.ndarray, np.ndarray]:
        """Intercepts and slopes of every piece at ω."""
        omega = np.asarray(omega, dtype=float)[: self.omega_dim]
        slopes = self.slopes[:, 0] + self.slopes[:, 1:] @ omega
        intercepts = np.empty_like(slopes)
        intercepts[0] = self.intercept[0] + self.intercept[1:] @ omega
        for j in range(1, slopes.size):
            intercepts[j] = intercepts[j - 1] + (slopes[j - 1] - slopes[j]) * self.breakpoints[j - 1]
        return intercepts, slopes

    def argument(self, x) -> float:
        return float(self.weights @ x)

    def _window(self, s: float) -> Optional[int]:
        if self.smoothing <= 0:
            return None
        for k, beta in enumerate(self.breakpoints):
            if beta - self.smoothing < s < beta + self.smoothing:
                return k
        return None

    def _kink(self, s: float) -> Optional[int]:
        for k, beta in enumerate(self.breakpoints):
            if abs(s - beta) <= SNAP_TOL * max(1.0, abs(beta)):
                return k
        return None

    def _piece(self, s: float) -> int:
        return int(np.searchsorted(self.breakpoints, s, side="right"))

    def value(self, s: float, omega) -> float:
        intercepts, slopes = self.pieces(omega)
        k = self._window(s)
        if k is not None:
            beta, eps = self.breakpoints[k], self.smoothing
            t = s - beta + eps
            start = intercepts[k] + slopes[k] * (beta - eps)
            return float(start + slopes[k] * t + (slopes[k + 1] - slopes[k]) * t * t / (4.0 * eps))
        j = self._piece(s)
        return float(intercepts[j] + slopes[j] * s)

    def slope(self, s: float, omega) -> Tuple[float, float, float]:
        """(lower, upper, right) derivative; lower < upper only at an exact kink."""
        _, slopes = self.pieces(omega)
        k = self._window(s)
        if k is not None:
            t = s - self.breakpoints[k] + self.smoothing
            d = float(slopes[k] + (slopes[k + 1] - slopes[k]) * t / (2.0 * self.smoothing))
            return d, d, d
        k = self._kink(s) if self.smoothing == 0 else None
        if k is not None:
            left, right = float(slopes[k]), float(slopes[k + 1])
            return min(left, right), max(left, right), right
        d = float(slopes[self._piece(s)])
        return d, d, d

    def curvature(self, s: float, omega) -> float:
        k = self._window(s)
        if k is None:
            return 0.0
        _, slopes = self.pieces(omega)
        return float((slopes[k + 1] - slopes[k]) / (2.0 * self.smoothing))

    def with_smoothing(self, smoothing: float) -> "PiecewiseLinear":
        return replace(self, smoothing=smoothing)


@dataclass(frozen=True, eq=False)
class SmoothTerm:
    """coef(ω) · Π x_v^p · g(wᵀx), g the value or slope of a piecewise-linear factor."""
    coef: float = 1.0
    coef_omega: np.ndarray = field(default_factory=lambda: np.zeros(0))
    powers: Tuple[Tuple[int, int], ...] = ()
    factor: Optional[PiecewiseLinear] = None
    factor_mode: str = "value"  # value, slope

    def __post_init__(self):
        object.__setattr__(self, "coef_omega", _frozen(np.atleast_1d(self.coef_omega), 1, "coef_omega"))
        object.__setattr__(self, "powers", tuple((int(v), int(p)) for v, p in self.powers))
        if self.factor_mode not in ("value", "slope"):
            raise ModelValidationError(f"Unknown factor mode {self.factor_mode!r}")
        if any(p < 0 for _, p in self.powers):
            raise ModelValidationError("Monomial powers must be nonnegative")

    @property
    def omega_dim(self) -> int:
        own = int(self.coef_omega.size)
        return max(own, self.factor.omega_dim if self.factor is not None else 0)

    def coefficient(self, omega) -> float:
        if self.coef_omega.size == 0:
            return float(self.coef)
        return float(self.coef + self.coef_omega @ np.asarray(omega, dtype=float)[: self.coef_omega.size])

    def monomial(self, x) -> float:
        value = 1.0
        for var, power in self.powers:
            value *= x[var] ** power
        return value

    def monomial_gradient(self, x, dim: int) -> np.ndarray:
        grad = np.zeros(dim)
        for index, (var, power) in enumerate(self.powers):
            if power == 0:
                continue
            rest = 1.0
            for other, (v, p) in enumerate(self.powers):
                if other != index:
                    rest *= x[v] ** p
            grad[var] += power * x[var] ** (power - 1) * rest
        return grad

    def scaled(self, factor: float) -> "SmoothTerm":
        return replace(self, coef=self.coef * factor, coef_omega=self.coef_omega * factor)


SELECTIONS = ("right", "min", "max")


@dataclass(frozen=True, eq=False)
class SmoothMap(ScenarioMap):
    """Map assembled from the term grammar, one tuple of terms per component.

    ``selection`` resolves slope factors at exact kinks: the right derivative,
    or the endpoint that minimizes / maximizes each term.
    """
    size: int
    components: Tuple[Tuple[SmoothTerm, ...], ...]
    selection: str = "right"

    def __post_init__(self):
        components = tuple(tuple(terms) for terms in self.components)
        if len(components) != self.size:
            raise DimensionError(f"{len(components)} components for a map of dimension {self.size}")
        if self.selection not in SELECTIONS:
            raise ModelValidationError(f"Unknown selection {self.selection!r}")
        for terms in components:
            for term in terms:
                if any(not 0 <= v < self.size for v, _ in term.powers):
                    raise DimensionError("Monomial references a variable outside the map dimension")
                if term.factor is not None and term.factor.weights.size != self.size:
                    raise DimensionError("Piecewise factor weights do not match the map dimension")
        object.__setattr__(self, "components", components)

    @property
    def dim(self) -> int:
        return self.size

    @property
    def omega_dim(self) -> int:
        return max((term.omega_dim for terms in self.components for term in terms), default=0)

    def _term_value(self, term: SmoothTerm, x, omega) -> float:
        scale = term.coefficient(omega) * term.monomial(x)
        if term.factor is None:
            return scale
        s = term.factor.argument(x)
        if term.factor_mode == "value":
            return scale * term.factor.value(s, omega)
        lower, upper, right = term.factor.slope(s, omega)
        if self.selection == "right":
            return scale * right
        candidates = (scale * lower, scale * upper)
        return min(candidates) if self.selection == "min" else max(candidates)

    def evaluate(self, x, omega) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([sum(self._term_value(term, x, omega) for term in terms)
                         for terms in self.components], dtype=float)

    def jacobian(self, x, omega) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        jac = np.zeros((self.size, self.size))
        for i, terms in enumerate(self.components):
            for term in terms:
                coef = term.coefficient(omega)
                mono = term.monomial(x)
                mono_grad = term.monomial_gradient(x, self.size)
                if term.factor is None:
                    jac[i] += coef * mono_grad
                    continue
                s = term.factor.argument(x)
                if term.factor_mode == "value":
                    g = term.factor.value(s, omega)
                    dg = term.factor.slope(s, omega)[2]
                else:
                    g = term.factor.slope(s, omega)[2]
                    dg = term.factor.curvature(s, omega)
                jac[i] += coef * (mono_grad * g + mono * dg * term.factor.weights)
        return jac

    def scaled(self, factor: float) -> "SmoothMap":
        components = tuple(tuple(term.scaled(factor) for term in terms) for terms in self.components)
        return SmoothMap(self.size, components, self.selection)


@dataclass(frozen=True, eq=False)
class IntervalValuedMap(ScenarioMap):
    """Componentwise interval image [lower(x; ω), upper(x; ω)]."""
    lower_map: ScenarioMap
    upper_map: ScenarioMap

    single_valued = False

    def __post_init__(self):
        if self.lower_map.dim != self.upper_map.dim:
            raise DimensionError("Lower and upper selection maps differ in dimension")

    @classmethod
    def clarke(cls, size: int, components) -> "IntervalValuedMap":
        """Interval map whose selections are the extremal endpoints of each slope term."""
        return cls(SmoothMap(size, components, "min"), SmoothMap(size, components, "max"))

    @property
    def dim(self) -> int:
        return self.lower_map.dim

    @property
    def omega_dim(self) -> int:
        return max(self.lower_map.omega_dim, self.upper_map.omega_dim)

    def bounds(self, x, omega) -> Tuple[np.ndarray, np.ndarray]:
        lower = self.lower_map.evaluate(x, omega)
        upper = self.upper_map.evaluate(x, omega)
        if np.any(lower > upper + 1e-12 * (1.0 + np.abs(upper))):
            raise ModelValidationError("Interval map has lower selection above upper selection")
        return lower, upper

    def evaluate(self, x, omega) -> np.ndarray:
        raise MultiValuedMapError("Interval-valued map has no single value; use a selection")

    def jacobian(self, x, omega) -> np.ndarray:
        raise MultiValuedMapError("Interval-valued map has no Jacobian")

    def scaled(self, factor: float) -> "IntervalValuedMap":
        if factor <= 0:
            raise ModelValidationError("Interval maps are only scaled by positive factors")
        return IntervalValuedMap(self.lower_map.scaled(factor), self.upper_map.scaled(factor))


# ---------------------------------------------------------------------------
# Moving sets and problem instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MovingSet:
    """K(x) = {y : l0 + A_l x <= y <= u0 + A_u x}.

    Translated sets c(x) + K0 with c(x) = C x + c0 use A_l = A_u = C.
    """
    lower_base: np.ndarray
    lower_matrix: np.ndarray
    upper_base: np.ndarray
    upper_matrix: np.ndarray

    def __post_init__(self):
        lower_base = _frozen(self.lower_base, 1, "lower_base")
        n = lower_base.size
        for name in ("lower_matrix", "upper_matrix"):
            matrix = _frozen(getattr(self, name), 2, name)
            if matrix.shape != (n, n):
                raise DimensionError(f"{name} has shape {matrix.shape}, expected ({n}, {n})")
            object.__setattr__(self, name, matrix)
        upper_base = _frozen(self.upper_base, 1, "upper_base")
        if upper_base.size != n:
            raise DimensionError("Moving-set bounds differ in length")
        object.__setattr__(self, "lower_base", lower_base)
        object.__setattr__(self, "upper_base", upper_base)

    @classmethod
    def translated(cls, base: GroundSet, shift_matrix, shift_offset=None) -> "MovingSet":
        shift_matrix = np.array(shift_matrix, dtype=float)
        offset = np.zeros(base.dim) if shift_offset is None else np.asarray(shift_offset, dtype=float)
        return cls(base.lower + offset, shift_matrix, base.upper + offset, shift_matrix)

    @classmethod
    def constant(cls, base: GroundSet) -> "MovingSet":
        return cls.translated(base, np.zeros((base.dim, base.dim)))

    @property
    def dim(self) -> int:
        return int(self.lower_base.size)

    def bounds_at(self, x) -> Tuple[np.ndarray, np.ndarray]:
        x = check_vector(x, self.dim)
        # inf + finite stays inf; the matrices never multiply an infinite base
        return self.lower_base + self.lower_matrix @ x, self.upper_base + self.upper_matrix @ x

    def is_empty_at(self, x) -> bool:
        lower, upper = self.bounds_at(x)
        return bool(np.any(lower > upper))

    def at(self, x) -> GroundSet:
        lower, upper = self.bounds_at(x)
        return GroundSet.box(lower, upper)

    def contains(self, x, tol: float = 1e-10) -> bool:
        lower, upper = self.bounds_at(x)
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= lower - tol) and np.all(x <= upper + tol))

    def contraction_modulus(self) -> float:
        return float(max(np.linalg.norm(self.lower_matrix, 2), np.linalg.norm(self.upper_matrix, 2)))

    def is_contractive(self) -> bool:
        return self.contraction_modulus() < 1.0

    def sample_image(self, x, count: int, rng: np.random.Generator, radius: float = 1e3) -> np.ndarray:
        """Points of K(x); infinite sides are truncated at ``radius`` beyond the finite side."""
        lower, upper = self.bounds_at(x)
        lo = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper - radius, -radius))
        hi = np.where(np.isfinite(upper), upper, lo + radius)
        hi = np.maximum(hi, lo)
        return lo + rng.random((count, self.dim)) * (hi - lo)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """SVI / SCP / MixedSCP / SQVI with a scenario-based map."""
    kind: str
    ground_set: GroundSet
    map: ScenarioMap
    scenario_model: ScenarioModel
    moving_set: Optional[MovingSet] = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("SVI", "SCP", "MixedSCP", "SQVI"):
            raise ModelValidationError(f"Unknown problem kind {self.kind!r}")
        if self.map.dim != self.ground_set.dim:
            raise DimensionError(f"Map dimension {self.map.dim} does not match set dimension {self.ground_set.dim}")
        if self.kind == "SCP" and self.ground_set.variant != "orthant":
            raise ModelValidationError("SCP requires a cone (nonnegative orthant) ground set")
        if self.kind == "MixedSCP" and self.ground_set.variant != "mixed":
            raise ModelValidationError("MixedSCP requires a mixed partition ground set")
        if self.ground_set.variant == "mixed" and self.kind != "MixedSCP":
            raise ModelValidationError("Mixed partitions are only valid for MixedSCP problems")
        if self.kind == "SQVI":
            if self.moving_set is None:
                raise ModelValidationError("SQVI needs a moving-set descriptor")
            if self.moving_set.dim != self.dim:
                raise DimensionError("Moving set dimension does not match the problem")
        elif self.moving_set is not None:
            raise ModelValidationError(f"{self.kind} problems do not take a moving set")
        omega_dim = self.map.omega_dim
        if omega_dim and omega_dim > self.scenario_model.omega_dim:
            raise DimensionError(
                f"Map reads {omega_dim} ω coordinates, scenario model provides {self.scenario_model.omega_dim}")

    @property
    def dim(self) -> int:
        return self.ground_set.dim

    @property
    def is_complementarity(self) -> bool:
        return self.kind in ("SCP", "MixedSCP")

    def feasible_set(self, x=None) -> GroundSet:
        """K, or K(x) for SQVI problems."""
        if self.kind == "SQVI" and x is not None:
            return self.moving_set.at(x)
        return self.ground_set

    def with_map(self, new_map: ScenarioMap) -> "ProblemInstance":
        return replace(self, map=new_map)

    def with_scenarios(self, model: ScenarioModel) -> "ProblemInstance":
        return replace(self, scenario_model=model)


@dataclass(frozen=True)
class ExpectationEstimate:
    """Estimate of E[F(x; ω)]."""
    value: np.ndarray
    mode: str  # exact, montecarlo
    samples: int = 0
    seed: Optional[int] = None
    stderr: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class AveragedMap:
    """Frozen weighted average x ↦ Σ_k w_k F(x; ω_k) (+ regularization · x)."""
    scenario_map: ScenarioMap
    scenarios: np.ndarray
    weights: np.ndarray
    regularization: float = 0.0
    matrix: Optional[np.ndarray] = field(default=None, init=False)
    offset: Optional[np.ndarray] = field(default=None, init=False)

    def __post_init__(self):
        if not self.scenario_map.single_valued:
            raise MultiValuedMapError("Only single-valued maps can be averaged")
        scenarios = _frozen(np.reshape(self.scenarios, (len(self.weights), -1)), 2, "scenarios")
        weights = _frozen(self.weights, 1, "weights")
        object.__setattr__(self, "scenarios", scenarios)
        object.__setattr__(self, "weights", weights)
        if isinstance(self.scenario_map, RandomAffineMap):
            # affine in ω: the average equals the map at the weighted mean of ω
            omega_bar = weights @ scenarios if scenarios.shape[1] else np.zeros(0)
            n = self.scenario_map.dim
            matrix = self.scenario_map.matrix_at(omega_bar) + self.regularization * np.eye(n)
            offset = np.array(self.scenario_map.offset_at(omega_bar))
            object.__setattr__(self, "matrix", matrix)
            object.__setattr__(self, "offset", offset)

    @property
    def dim(self) -> int:
        return self.scenario_map.dim

    @property
    def is_affine(self) -> bool:
        return self.matrix is not None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_affine:
            return self.matrix @ x + self.offset
        total = np.zeros(self.dim)
        for weight, omega in zip(self.weights, self.scenarios):
            total += weight * self.scenario_map.evaluate(x, omega)
        return total + self.regularization * x

    def jacobian(self, x) -> np.ndarray:
        if self.is_affine:
            return np.array(self.matrix)
        x = np.asarray(x, dtype=float)
        total = np.zeros((self.dim, self.dim))
        for weight, omega in zip(self.weights, self.scenarios):
            total += weight * self.scenario_map.jacobian(x, omega)
        return total + self.regularization * np.eye(self.dim)

    def regularized(self, tau: float) -> "AveragedMap":
        return AveragedMap(self.scenario_map, self.scenarios, self.weights, regularization=tau)
