"""Scalar representing functions of two-variable GKE means.

For a generator ``g`` and weight ``λ`` the representing function ``f_λ(x)`` is
the positive root ``y`` of ``(1−λ)·g(1/y) + λ·g(x/y) = 0``. The left side is
strictly decreasing in ``y`` and changes sign between the harmonic and the
arithmetic means of ``(1, x)``, so bisection on that bracket always converges.
Bisection stops at a width relative to the lower end of the bracket, and
safeguarded Newton steps then bring the residual under the tolerance.
"""

import math
from dataclasses import dataclass

import numpy as np
import polars as pl
import scipy.optimize
from prefect.logging import get_logger

from gke_means.errors import BadParameterError, NoConvergenceError, OutOfRangeError
from gke_means.monotone_fns import MonotoneGenerator, deform, range_endpoints

logger = get_logger(__name__)

DEFAULT_TOL = 1e-12
BISECT_REL_WIDTH = 1e-14
BISECT_MAX_ITER = 400
BISECT_RTOL = 4.0 * np.finfo(np.float64).eps
NEWTON_MAX_STEPS = 8
LIMIT_NEAR, LIMIT_FAR = 1e-6, 1e-12


@dataclass(frozen=True)
class RepFnQuery:
    """One evaluation point ``(g, λ, x)`` of a representing function."""

    g: MonotoneGenerator
    lam: float
    x: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise BadParameterError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.x > 0.0 or not math.isfinite(self.x):
            raise BadParameterError(f"x must be a positive finite real, got {self.x}")


def _gke_residual(g: MonotoneGenerator, lam: float, x: float, y: float) -> float:
    return float((1.0 - lam) * g.eval(1.0 / y) + lam * g.eval(x / y))


def _gke_slope(g: MonotoneGenerator, lam: float, x: float, y: float) -> float:
    return float(-((1.0 - lam) * g.derivative(1.0 / y) + lam * x * g.derivative(x / y)) / y**2)


def _newton_polish(
    g: MonotoneGenerator,
    lam: float,
    x: float,
    y: float,
    bracket: tuple[float, float],
    tol: float,
) -> tuple[float, int]:
    """Safeguarded Newton steps inside ``bracket``; a step leaving it bisects instead."""
    lower, upper = bracket
    residual = _gke_residual(g, lam, x, y)
    steps = 0
    while abs(residual) > tol and steps < NEWTON_MAX_STEPS:
        # the residual decreases in y
        if residual > 0.0:
            lower = y
        else:
            upper = y
        slope = _gke_slope(g, lam, x, y)
        candidate = y - residual / slope if math.isfinite(slope) and slope < 0.0 else math.nan
        if not lower < candidate < upper:
            candidate = 0.5 * (lower + upper)
        y, residual = candidate, _gke_residual(g, lam, x, candidate)
        steps += 1
    return y, steps


def rep_eval(query: RepFnQuery, tol: float = DEFAULT_TOL) -> float:
    """Evaluate ``f_λ(x)``.

    Args:
        query: The generator, weight and point.
        tol: Bound on ``|(1−λ)g(1/y) + λg(x/y)|`` at the returned ``y``.

    Returns:
        ``y`` in ``[((1−λ) + λ/x)⁻¹, (1−λ) + λx]``.

    Raises:
        NoConvergenceError: If the bracket or the root refinement fails.
    """
    if tol <= 0:
        raise BadParameterError(f"tol must be positive, got {tol}")
    g, lam, x = query.g, query.lam, query.x
    if lam == 0.0 or x == 1.0:
        return 1.0
    if lam == 1.0:
        return x

    lower = 1.0 / ((1.0 - lam) + lam / x)
    upper = (1.0 - lam) + lam * x
    lower, upper = min(lower, upper), max(lower, upper)
    at_lower, at_upper = _gke_residual(g, lam, x, lower), _gke_residual(g, lam, x, upper)
    # the arithmetic and harmonic generators have their root on the bracket
    if abs(at_lower) <= tol or abs(at_upper) <= tol:
        return lower if abs(at_lower) <= abs(at_upper) else upper
    if not at_lower > 0.0 > at_upper:
        raise NoConvergenceError(
            f"sign pattern violated on bracket [{lower}, {upper}] for {g} at lambda={lam}, x={x}",
            iterations=0,
            residual=max(abs(at_lower), abs(at_upper)),
        )

    xtol = BISECT_REL_WIDTH * lower
    root, info = scipy.optimize.bisect(
        lambda y: _gke_residual(g, lam, x, y),
        lower,
        upper,
        xtol=xtol,
        maxiter=BISECT_MAX_ITER,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise NoConvergenceError(
            f"bisection did not converge for {g} at lambda={lam}, x={x}",
            iterations=info.iterations,
            residual=abs(_gke_residual(g, lam, x, root)),
        )
    width = 2.0 * (xtol + BISECT_RTOL * root)
    bracket = (max(lower, root - width), min(upper, root + width))
    y, steps = _newton_polish(g, lam, x, float(root), bracket, tol)
    residual = abs(_gke_residual(g, lam, x, y))
    if residual > tol:
        logger.warning(f"representing function residual {residual:.3e} exceeds {tol:.1e}")
        raise NoConvergenceError(
            f"root refinement missed tolerance for {g} at lambda={lam}, x={x}",
            iterations=info.iterations + steps,
            residual=residual,
        )
    return y


def rep_eval_many(
    g: MonotoneGenerator, lam: float, xs: np.ndarray, tol: float = DEFAULT_TOL
) -> np.ndarray:
    """Evaluate ``f_λ`` on every point of ``xs``."""
    return np.array([rep_eval(RepFnQuery(g, lam, float(x)), tol) for x in np.ravel(xs)])


def rep_inverse(query: RepFnQuery) -> float:
    """Evaluate ``f_λ⁻¹(x) = x·g⁻¹(−((1−λ)/λ)·g(1/x))``.

    Raises:
        OutOfRangeError: If ``x`` lies outside the range of ``f_λ``.
    """
    g, lam, x = query.g, query.lam, query.x
    if not 0.0 < lam < 1.0:
        raise BadParameterError(f"inverse needs lambda in (0, 1), got {lam}")
    argument = -((1.0 - lam) / lam) * float(g.eval(1.0 / x))
    if not g.in_range(argument):
        raise OutOfRangeError(
            f"{x} is outside the range of f_lambda for {g} at lambda={lam} "
            f"(inverse argument {argument:.6g} not in ({g.endpoint_zero}, {g.endpoint_inf}))"
        )
    return x * float(g.inverse(argument))


@dataclass(frozen=True)
class RepRange:
    """Range ``(y₀, y_∞)`` of ``f_λ``.

    ``numeric`` marks endpoints sampled at 1e±12. ``settled_lower`` and
    ``settled_upper`` hold closed forms when a sufficient condition applies.
    """

    lower: float
    upper: float
    numeric: bool = False
    settled_lower: float | None = None
    settled_upper: float | None = None


def _endpoint_closed_form(g: MonotoneGenerator, lam: float, limit: float) -> float:
    return 1.0 / float(g.inverse(-(lam / (1.0 - lam)) * limit))


def _sampled_limit(
    g: MonotoneGenerator, lam: float, near: float, far: float, shrinking: bool, tol: float
) -> float:
    near_value = rep_eval(RepFnQuery(g, lam, near), tol)
    far_value = rep_eval(RepFnQuery(g, lam, far), tol)
    if shrinking and far_value < 0.5 * near_value:
        return 0.0
    if not shrinking and far_value > 2.0 * near_value:
        return math.inf
    return far_value


def rep_range(g: MonotoneGenerator, lam: float, tol: float = DEFAULT_TOL) -> RepRange:
    """Range of ``f_λ`` following the four finiteness cases of ``g``."""
    if not 0.0 < lam < 1.0:
        raise BadParameterError(f"range needs lambda in (0, 1), got {lam}")
    endpoints = range_endpoints(g)
    g_zero, g_inf = endpoints.lower, endpoints.upper
    match endpoints.case_id:
        case 1:
            return RepRange(0.0, math.inf)
        case 2:
            return RepRange(0.0, _endpoint_closed_form(g, lam, g_inf))
        case 3:
            return RepRange(_endpoint_closed_form(g, lam, g_zero), math.inf)

    settled_lower = settled_upper = None
    if (1.0 - lam) * g_inf + lam * g_zero > 0.0:
        settled_lower = _endpoint_closed_form(g, lam, g_zero)
    if (1.0 - lam) * g_zero + lam * g_inf < 0.0:
        settled_upper = _endpoint_closed_form(g, lam, g_inf)
    lower = _sampled_limit(g, lam, LIMIT_NEAR, LIMIT_FAR, shrinking=True, tol=tol)
    upper = _sampled_limit(g, lam, 1.0 / LIMIT_NEAR, 1.0 / LIMIT_FAR, shrinking=False, tol=tol)
    logger.debug(f"numeric range of f_{lam} for {g}: ({lower}, {upper})")
    return RepRange(lower, upper, True, settled_lower, settled_upper)


def lambda_derivative_at_zero(
    g: MonotoneGenerator, x: float, h: float = 1e-6, tol: float = DEFAULT_TOL
) -> float:
    """Forward difference ``(f_h(x) − 1)/h``, which tends to ``g(x)`` as ``h → 0``."""
    if not 0.0 < h <= 1e-4:
        raise BadParameterError(f"step must lie in (0, 1e-4], got {h}")
    return (rep_eval(RepFnQuery(g, h, x), tol) - 1.0) / h


def deformed_rep_eval(
    g: MonotoneGenerator, p: float, lam: float, x: float, tol: float = DEFAULT_TOL
) -> float:
    """Representing function of the deformed generator ``g_p``."""
    return rep_eval(RepFnQuery(deform(g, p), lam, x), tol)


def power_rep_function(t: float, lam: float, x: float) -> float:
    """Closed form ``[1−λ+λxᵗ]^{1/t}``, with ``x^λ`` at ``t = 0``."""
    if t == 0.0:
        return x**lam
    return (1.0 - lam + lam * x**t) ** (1.0 / t)


def scalar_ando_hiai_margin(g: MonotoneGenerator, p: float, lam: float, x: float) -> float:
    """``f_λ(x) − f_λ(x^{1/p})^p``; non-negative everywhere iff ``g_p ≤ g``."""
    direct = rep_eval(RepFnQuery(g, lam, x))
    deformed = rep_eval(RepFnQuery(g, lam, x ** (1.0 / p))) ** p
    return direct - deformed


def rep_table(
    g: MonotoneGenerator,
    lam: float,
    xmin: float,
    xmax: float,
    points: int,
    tol: float = DEFAULT_TOL,
) -> pl.DataFrame:
    """Tabulate ``(x, f_λ(x))`` on a geometric grid from ``xmin`` to ``xmax``."""
    if points < 1 or not 0.0 < xmin <= xmax:
        raise BadParameterError(f"invalid grid xmin={xmin}, xmax={xmax}, points={points}")
    xs = np.geomspace(xmin, xmax, points)
    return pl.DataFrame({"x": xs, "f": rep_eval_many(g, lam, xs, tol)})
