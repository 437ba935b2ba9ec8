"""Generators of the class 𝓛 of operator monotone functions.

A generator ``g`` is operator monotone on ``(0, ∞)`` with ``g(1) = 0`` and
``g'(1) = 1``. Only the catalogued tags can be built; each carries a closed-form
inverse, derivative and the limits ``g(0⁺)`` and ``g(+∞)``. Deformations
``g_p(x) = p·g(x^{1/p})`` compose from a base generator.

Spec strings: ``log``, ``power:<t>``, ``sqrt2``, ``reciprocal1``, ``moebius``,
``deform:<p>:<base-spec>``.
"""

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray
from prefect.logging import get_logger

from gke_means.errors import BadParameterError, ParseError
from gke_means.spd_core import FloatArray

logger = get_logger(__name__)

LOG_REDIRECT_THRESHOLD = 1e-8
DEFAULT_GRID = np.logspace(-6, 6, 241)


class GeneratorKind(StrEnum):
    LOG = "log"
    POWER = "power"
    SQRT2 = "sqrt2"
    RECIPROCAL1 = "reciprocal1"
    MOEBIUS = "moebius"
    DEFORMED = "deform"


class ScalarGenerator(Protocol):
    """Anything with an ``eval`` and a ``derivative`` on ``(0, ∞)``."""

    def eval(self, x: ArrayLike) -> FloatArray: ...

    def derivative(self, x: ArrayLike) -> FloatArray: ...


@dataclass(frozen=True)
class RangeEndpoints:
    """Limits ``g(0⁺)`` and ``g(+∞)`` with their finiteness case (1-4)."""

    lower: float
    upper: float
    case_id: int


def _as_float_array(x: ArrayLike) -> FloatArray:
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class MonotoneGenerator:
    """A catalogued member of 𝓛.

    ``parameter`` is ``t`` for power generators and ``p`` for deformations, whose
    ``base`` is the deformed generator.
    """

    kind: GeneratorKind
    parameter: float | None = None
    base: "MonotoneGenerator | None" = field(default=None, repr=False)

    @property
    def spec(self) -> str:
        match self.kind:
            case GeneratorKind.POWER:
                return f"power:{self.parameter!r}"
            case GeneratorKind.DEFORMED:
                assert self.base is not None
                return f"deform:{self.parameter!r}:{self.base.spec}"
            case _:
                return self.kind.value

    def __str__(self) -> str:
        return self.spec

    def eval(self, x: ArrayLike) -> FloatArray:
        """``g(x)`` for ``x > 0``."""
        x = _as_float_array(x)
        match self.kind:
            case GeneratorKind.LOG:
                return np.log(x)
            case GeneratorKind.POWER:
                t = self.parameter
                return np.expm1(t * np.log(x)) / t
            case GeneratorKind.SQRT2:
                return 2.0 * (np.sqrt(x) - 1.0)
            case GeneratorKind.RECIPROCAL1:
                return 1.0 - 1.0 / x
            case GeneratorKind.MOEBIUS:
                return 2.0 * (x - 1.0) / (x + 1.0)
            case GeneratorKind.DEFORMED:
                p = self.parameter
                return p * self.base.eval(x ** (1.0 / p))

    def inverse(self, s: ArrayLike) -> FloatArray:
        """``g⁻¹(s)`` for ``s`` in the open range of ``g``; NaN outside it."""
        s = _as_float_array(s)
        with np.errstate(all="ignore"):
            match self.kind:
                case GeneratorKind.LOG:
                    value = np.exp(s)
                case GeneratorKind.POWER:
                    t = self.parameter
                    value = np.exp(np.log1p(t * s) / t)
                case GeneratorKind.SQRT2:
                    value = (1.0 + s / 2.0) ** 2
                case GeneratorKind.RECIPROCAL1:
                    value = 1.0 / (1.0 - s)
                case GeneratorKind.MOEBIUS:
                    value = (2.0 + s) / (2.0 - s)
                case GeneratorKind.DEFORMED:
                    p = self.parameter
                    value = self.base.inverse(s / p) ** p
        return np.where(self.in_range(s), value, np.nan)

    def derivative(self, x: ArrayLike) -> FloatArray:
        """``g'(x)`` for ``x > 0``."""
        x = _as_float_array(x)
        match self.kind:
            case GeneratorKind.LOG:
                return 1.0 / x
            case GeneratorKind.POWER:
                return x ** (self.parameter - 1.0)
            case GeneratorKind.SQRT2:
                return 1.0 / np.sqrt(x)
            case GeneratorKind.RECIPROCAL1:
                return 1.0 / x**2
            case GeneratorKind.MOEBIUS:
                return 4.0 / (x + 1.0) ** 2
            case GeneratorKind.DEFORMED:
                p = self.parameter
                root = x ** (1.0 / p)
                return self.base.derivative(root) * root / x

    @property
    def endpoint_zero(self) -> float:
        """``g(0⁺)``, possibly ``-inf``."""
        match self.kind:
            case GeneratorKind.LOG:
                return -math.inf
            case GeneratorKind.POWER:
                return -1.0 / self.parameter if self.parameter > 0 else -math.inf
            case GeneratorKind.SQRT2 | GeneratorKind.MOEBIUS:
                return -2.0
            case GeneratorKind.RECIPROCAL1:
                return -math.inf
            case GeneratorKind.DEFORMED:
                return self.parameter * self.base.endpoint_zero

    @property
    def endpoint_inf(self) -> float:
        """``g(+∞)``, possibly ``+inf``."""
        match self.kind:
            case GeneratorKind.LOG | GeneratorKind.SQRT2:
                return math.inf
            case GeneratorKind.POWER:
                return math.inf if self.parameter > 0 else -1.0 / self.parameter
            case GeneratorKind.RECIPROCAL1:
                return 1.0
            case GeneratorKind.MOEBIUS:
                return 2.0
            case GeneratorKind.DEFORMED:
                return self.parameter * self.base.endpoint_inf

    def in_range(self, s: ArrayLike) -> NDArray[np.bool_]:
        """Membership of ``s`` in the open interval ``(g(0⁺), g(+∞))``."""
        s = _as_float_array(s)
        return (s > self.endpoint_zero) & (s < self.endpoint_inf)


def make_generator(kind: GeneratorKind | str, parameter: float | None = None) -> MonotoneGenerator:
    """Build a catalogued generator.

    Raises:
        BadParameterError: If a power exponent is outside ``[-1, 1]`` or exactly zero.
    """
    kind = GeneratorKind(kind)
    match kind:
        case GeneratorKind.POWER:
            if parameter is None or not -1.0 <= parameter <= 1.0 or parameter == 0.0:
                raise BadParameterError(f"power exponent must be nonzero in [-1, 1]: {parameter}")
            if abs(parameter) < LOG_REDIRECT_THRESHOLD:
                logger.debug(f"power exponent {parameter} redirected to log")
                return MonotoneGenerator(GeneratorKind.LOG)
            return MonotoneGenerator(kind, float(parameter))
        case GeneratorKind.DEFORMED:
            raise BadParameterError("use deform() to build deformed generators")
        case _:
            return MonotoneGenerator(kind)


def deform(generator: MonotoneGenerator, p: float) -> MonotoneGenerator:
    """Return ``g_p(x) = p·g(x^{1/p})`` for ``p ≥ 1``."""
    if not p >= 1.0:
        raise BadParameterError(f"deformation parameter must be >= 1, got {p}")
    if p == 1.0:
        return generator
    if generator.kind is GeneratorKind.DEFORMED:
        return deform(generator.base, generator.parameter * p)
    return MonotoneGenerator(GeneratorKind.DEFORMED, float(p), generator)


def adjoint(generator: MonotoneGenerator) -> MonotoneGenerator:
    """Return ``g*(x) = −g(1/x)``, so that ``σ_g(ω; 𝔸⁻¹)⁻¹ = σ_{g*}(ω; 𝔸)``."""
    match generator.kind:
        case GeneratorKind.LOG | GeneratorKind.MOEBIUS:
            return generator
        case GeneratorKind.POWER:
            return make_generator(GeneratorKind.POWER, -generator.parameter)
        case GeneratorKind.SQRT2:
            return make_generator(GeneratorKind.POWER, -0.5)
        case GeneratorKind.RECIPROCAL1:
            return make_generator(GeneratorKind.POWER, 1.0)
        case GeneratorKind.DEFORMED:
            return deform(adjoint(generator.base), generator.parameter)


def parse_generator_spec(spec: str) -> MonotoneGenerator:
    """Parse a generator spec string such as ``power:0.5`` or ``deform:2:moebius``."""
    text = spec.strip()
    head, _, rest = text.partition(":")
    try:
        match head:
            case "power":
                return make_generator(GeneratorKind.POWER, float(rest))
            case "deform":
                p_text, sep, base_spec = rest.partition(":")
                if not sep:
                    raise ParseError(f"deform spec needs a base generator: {spec!r}")
                return deform(parse_generator_spec(base_spec), float(p_text))
            case "log" | "sqrt2" | "reciprocal1" | "moebius" if not rest:
                return make_generator(head)
    except ValueError as e:
        if isinstance(e, BadParameterError | ParseError):
            raise
        raise ParseError(f"invalid generator spec {spec!r}: {e}") from e
    raise ParseError(f"unknown generator spec {spec!r}")


CATALOGUE: tuple[MonotoneGenerator, ...] = (
    make_generator(GeneratorKind.LOG),
    make_generator(GeneratorKind.POWER, 0.5),
    make_generator(GeneratorKind.POWER, -0.5),
    make_generator(GeneratorKind.POWER, 1.0),
    make_generator(GeneratorKind.POWER, -1.0),
    make_generator(GeneratorKind.SQRT2),
    make_generator(GeneratorKind.RECIPROCAL1),
    make_generator(GeneratorKind.MOEBIUS),
)


def range_endpoints(generator: MonotoneGenerator) -> RangeEndpoints:
    """Classify ``g`` by the finiteness of ``g(0⁺)`` and ``g(+∞)``.

    Case 1: both infinite. Case 2: only ``g(+∞)`` finite. Case 3: only
    ``g(0⁺)`` finite. Case 4: both finite.
    """
    lower, upper = generator.endpoint_zero, generator.endpoint_inf
    lower_infinite, upper_infinite = math.isinf(lower), math.isinf(upper)
    if lower_infinite and upper_infinite:
        case_id = 1
    elif lower_infinite:
        case_id = 2
    elif upper_infinite:
        case_id = 3
    else:
        case_id = 4
    return RangeEndpoints(lower=lower, upper=upper, case_id=case_id)


@dataclass
class ClassReport:
    """Scalar-grid evidence for or against membership in 𝓛."""

    value_at_one: float
    derivative_at_one_residual: float
    monotonicity_violations: list[float] = field(default_factory=list)
    bound_violations: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            abs(self.value_at_one) <= 1e-12
            and self.derivative_at_one_residual <= 1e-12
            and not self.monotonicity_violations
            and not self.bound_violations
        )


def check_class_l(
    generator: ScalarGenerator, grid: ArrayLike = DEFAULT_GRID, slack: float = 1e-12
) -> ClassReport:
    """Refute membership in 𝓛 on a scalar grid.

    Reports the residuals of ``g(1) = 0`` and ``g'(1) = 1``, grid points where
    ``g`` fails to increase, and grid points violating
    ``1 − 1/x ≤ g(x) ≤ x − 1``.
    """
    x = np.sort(_as_float_array(grid))
    if x.size == 0 or np.any(x <= 0):
        raise BadParameterError("grid must be non-empty and positive")
    values = generator.eval(x)
    not_increasing = np.flatnonzero(np.diff(values) <= 0) + 1
    scale = slack * np.maximum(1.0, np.abs(values))
    outside = (values < 1.0 - 1.0 / x - scale) | (values > x - 1.0 + scale)
    return ClassReport(
        value_at_one=float(generator.eval(1.0)),
        derivative_at_one_residual=abs(float(generator.derivative(1.0)) - 1.0),
        monotonicity_violations=x[not_increasing].tolist(),
        bound_violations=x[outside].tolist(),
    )
