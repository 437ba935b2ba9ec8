"""Randomized checks of inequalities satisfied by GKE means.

Every check draws ``plan.trials`` instances, evaluates a signed margin per
trial and aggregates. A margin below ``-threshold`` is a violation; a trial
whose computation raises a library or numerical error is a violation as well. The
worst violating trial is kept as a serialized witness that
:func:`replay_witness` evaluates again.

Löwner margins are scaled by ``max(1, ‖A‖₂, ‖B‖₂)``; equality checks use the
negated relative Frobenius gap.
"""

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
import polars as pl
import scipy.optimize
from prefect.logging import get_logger

from gke_means.errors import (
    BadParameterError,
    GkeMeansError,
    InconclusiveError,
    OutOfRangeError,
    PrecheckFailedError,
)
from gke_means.gke_solver import (
    GkeProblem,
    SolverConfig,
    WeightVector,
    quasi_arithmetic,
    solve_gke,
    weighted_arithmetic_mean,
    weighted_harmonic_mean,
)
from gke_means.monotone_fns import (
    DEFAULT_GRID,
    MonotoneGenerator,
    adjoint,
    deform,
    parse_generator_spec,
)
from gke_means.rep_func import RepFnQuery, rep_eval, scalar_ando_hiai_margin
from gke_means.spd_core import (
    FloatArray,
    SpdMatrix,
    apply_scalar_function,
    congruence,
    loewner_margin,
    random_invertible,
    random_spd,
    spd_inverse,
    spd_power,
    symmetrize,
    thompson_distance,
)
from gke_means.verify.plan import CheckKind, CheckOutcome, TrialPlan, Witness
from gke_means.verify.sampling import TrialInstance, draw_instance

logger = get_logger(__name__)

CHECK_SOLVER = SolverConfig(residual_tol=1e-11)
ITERATIVE_SOLVER = CHECK_SOLVER.model_copy(update={"use_closed_forms": False})

# failures a trial records instead of propagating
TRIAL_ERRORS = (GkeMeansError, ArithmeticError, ValueError, np.linalg.LinAlgError)
ROUNDOFF_FACTOR = 16.0

CONGRUENCE_RTOL = 1e-7
PERMUTATION_RTOL = 1e-9
INIT_THOMPSON_TOL = 1e-8
SCALAR_RTOL = 1e-9
DUALITY_RTOL = 1e-8
GRID_SLACK = 1e-10
SCALAR_LAMBDAS = np.linspace(0.05, 0.95, 10)
SCALAR_POINTS = np.geomspace(1e-3, 1e3, 20)

Direction = Literal["le", "ge", "equal"]


@dataclass(frozen=True)
class TrialResult:
    """Margin of one trial; ``None`` when the trial's hypothesis did not apply.

    ``partial_skip`` marks trials where part of the hypothesis did not apply.
    """

    margin: float | None
    partial_skip: bool = False
    observations: dict[str, float] = field(default_factory=dict)


Evaluator = Callable[[MonotoneGenerator, TrialInstance, Mapping[str, Any]], TrialResult]

_EVALUATORS: dict[str, Evaluator] = {}


def _evaluator(name: str) -> Callable[[Evaluator], Evaluator]:
    def register(fn: Evaluator) -> Evaluator:
        _EVALUATORS[name] = fn
        return fn

    return register


def _solve(
    g: MonotoneGenerator,
    weights: WeightVector,
    matrices: Sequence[SpdMatrix],
    config: SolverConfig = CHECK_SOLVER,
) -> SpdMatrix:
    """Solve to ``config.residual_tol``, loosened to the roundoff floor of ill-spread inputs."""
    spread = max(m.norm for m in matrices) / min(float(m.eigenvalues[0]) for m in matrices)
    attainable = ROUNDOFF_FACTOR * float(np.finfo(np.float64).eps) * spread
    if attainable > config.residual_tol:
        config = config.model_copy(update={"residual_tol": attainable})
    return solve_gke(GkeProblem(weights, tuple(matrices), g), config).solution


def _relative_gap(actual: SpdMatrix | FloatArray, expected: SpdMatrix | FloatArray) -> float:
    a = actual.entries if isinstance(actual, SpdMatrix) else actual
    b = expected.entries if isinstance(expected, SpdMatrix) else expected
    return float(np.linalg.norm(a - b, "fro") / np.linalg.norm(b, "fro"))


def _relative_size(a: SpdMatrix, b: SpdMatrix) -> float:
    return float(np.linalg.norm(a.entries, "fro") / np.linalg.norm(b.entries, "fro"))


def _identity_margins(solution: SpdMatrix) -> tuple[float, float]:
    """``(margin of solution ≥ I, margin of solution ≤ I)``."""
    identity = SpdMatrix.identity(solution.dim)
    return loewner_margin(identity, solution), loewner_margin(solution, identity)


def _scaled(matrices: Sequence[SpdMatrix], factor: float) -> tuple[SpdMatrix, ...]:
    return tuple(SpdMatrix(factor * m.entries) for m in matrices)


def _powered(matrices: Sequence[SpdMatrix], p: float) -> tuple[SpdMatrix, ...]:
    return tuple(spd_power(m, p) for m in matrices)


def _normalize(matrices: Sequence[SpdMatrix], solution: SpdMatrix) -> tuple[SpdMatrix, ...]:
    """Congruence by ``X^{-1/2}`` so that the mean of the result is the identity."""
    inv_root = apply_scalar_function(solution, lambda w: w**-0.5)
    return tuple(congruence(m, inv_root) for m in matrices)


def _weighted_generator_sum(
    g: MonotoneGenerator, instance: TrialInstance, scale: float = 1.0
) -> FloatArray:
    total = np.zeros((instance.dim, instance.dim))
    for w, m in zip(instance.weights.weights, instance.matrices, strict=True):
        total += w * apply_scalar_function(m, lambda x: g.eval(scale * x))
    return symmetrize(total)


def _boundary_scale(g: MonotoneGenerator, instance: TrialInstance, extreme: int) -> float:
    """Scalar ``c`` with ``eig[extreme](Σ wᵢ g(cAᵢ)) = 0``.

    At ``c = 1/max‖Aᵢ‖`` every ``g(cAᵢ) ≤ 0`` and at ``c = 1/min λ_min(Aᵢ)``
    every ``g(cAᵢ) ≥ 0``, which brackets the root.
    """

    def edge(c: float) -> float:
        return float(np.linalg.eigvalsh(_weighted_generator_sum(g, instance, c))[extreme])

    lo = 1.0 / max(m.norm for m in instance.matrices)
    hi = 1.0 / min(float(m.eigenvalues[0]) for m in instance.matrices)
    if edge(lo) >= 0.0:
        return lo
    if edge(hi) <= 0.0:
        return hi
    return float(scipy.optimize.brentq(edge, lo, hi, xtol=1e-15 * hi))


@_evaluator("sign_lemma")
def _sign_lemma_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    tol = params["threshold"]
    margins = []
    eigenvalues = np.linalg.eigvalsh(_weighted_generator_sum(g, instance))
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    nonnegative, nonpositive = eigenvalues[0] >= -tol * scale, eigenvalues[-1] <= tol * scale
    if nonnegative or nonpositive:
        above, below = _identity_margins(_solve(g, instance.weights, instance.matrices))
        if nonnegative:
            margins.append(above)
        if nonpositive:
            margins.append(below)

    # rescale so the hypothesis holds on its boundary
    for extreme, side in ((0, 0), (-1, 1)):
        c = _boundary_scale(g, instance, extreme)
        solution = _solve(g, instance.weights, _scaled(instance.matrices, c))
        margins.append(_identity_margins(solution)[side])
    return TrialResult(min(margins), partial_skip=not (nonnegative or nonpositive))


@_evaluator("bounds")
def _bounds_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    solution = _solve(g, instance.weights, instance.matrices)
    harmonic = weighted_harmonic_mean(instance.weights, instance.matrices)
    arithmetic = weighted_arithmetic_mean(instance.weights, instance.matrices)
    return TrialResult(
        min(loewner_margin(harmonic, solution), loewner_margin(solution, arithmetic))
    )


@_evaluator("pointwise_order")
def _pointwise_order_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    f = parse_generator_spec(params["upper"])
    lower = _solve(g, instance.weights, instance.matrices)
    upper = _solve(f, instance.weights, instance.matrices)
    return TrialResult(loewner_margin(lower, upper))


@_evaluator("ando_hiai_1")
def _ando_hiai_1_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    weights, matrices = instance.weights, instance.matrices
    solution = _solve(g, weights, matrices)
    normalized = _normalize(matrices, solution)
    at_least_identity = _scaled(matrices, 1.0 / float(solution.eigenvalues[0]))
    at_most_identity = _scaled(matrices, 1.0 / solution.norm)
    margins = []
    for p in params["powers"]:
        g_p = deform(g, p)
        margins.extend(_identity_margins(_solve(g_p, weights, _powered(normalized, p))))
        margins.append(_identity_margins(_solve(g_p, weights, _powered(at_least_identity, p)))[0])
        margins.append(_identity_margins(_solve(g_p, weights, _powered(at_most_identity, p)))[1])
    return TrialResult(min(margins))


@_evaluator("ando_hiai_2")
def _ando_hiai_2_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    weights, matrices = instance.weights, instance.matrices
    direction: Direction = params["direction"]
    solution = _solve(g, weights, matrices)
    normalized = _normalize(matrices, solution)
    margins = []
    for p in params["powers"]:
        above, below = _identity_margins(_solve(g, weights, _powered(normalized, p)))
        if direction in ("le", "equal"):
            shifted = _scaled(matrices, 1.0 / float(solution.eigenvalues[0]))
            margins += [above, _identity_margins(_solve(g, weights, _powered(shifted, p)))[0]]
        if direction in ("ge", "equal"):
            shifted = _scaled(matrices, 1.0 / solution.norm)
            margins += [below, _identity_margins(_solve(g, weights, _powered(shifted, p)))[1]]
    return TrialResult(min(margins))


@_evaluator("conjecture_search")
def _conjecture_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    solution = _solve(g, instance.weights, instance.matrices)
    try:
        quasi = quasi_arithmetic(instance.weights, instance.matrices, g)
    except OutOfRangeError:
        return TrialResult(None)
    ratio = solution.norm / quasi.norm
    frobenius = _relative_size(solution, quasi)
    return TrialResult(1.0 - ratio, observations={"ratio": ratio, "frobenius_ratio": frobenius})


@_evaluator("congruence")
def _congruence_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    transform = random_invertible(instance.dim, instance.rng)
    solution = _solve(g, instance.weights, instance.matrices)
    moved = tuple(congruence(m, transform) for m in instance.matrices)
    expected = symmetrize(transform.T @ solution.entries @ transform)
    return TrialResult(-_relative_gap(_solve(g, instance.weights, moved), expected))


@_evaluator("monotonicity")
def _monotonicity_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    rng = instance.rng
    larger = tuple(
        SpdMatrix(m.entries + 0.5 * random_spd(instance.dim, 1.0, rng).entries)
        for m in instance.matrices
    )
    smaller_mean = _solve(g, instance.weights, instance.matrices)
    larger_mean = _solve(g, instance.weights, larger)
    return TrialResult(loewner_margin(smaller_mean, larger_mean))


@_evaluator("permutation")
def _permutation_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    problem = GkeProblem(instance.weights, instance.matrices, g)
    order = instance.rng.permutation(len(instance.matrices)).tolist()
    direct = solve_gke(problem, CHECK_SOLVER).solution
    shuffled = solve_gke(problem.permuted(order), CHECK_SOLVER).solution
    return TrialResult(-_relative_gap(shuffled, direct))


@_evaluator("init_independence")
def _init_independence_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    harmonic = weighted_harmonic_mean(instance.weights, instance.matrices)
    from_arithmetic = _solve(g, instance.weights, instance.matrices, ITERATIVE_SOLVER)
    from_harmonic = _solve(
        g,
        instance.weights,
        instance.matrices,
        ITERATIVE_SOLVER.model_copy(update={"initial_guess": harmonic}),
    )
    return TrialResult(-thompson_distance(from_arithmetic, from_harmonic))


@_evaluator("scalar_consistency")
def _scalar_consistency_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    rng = instance.rng
    x = float(np.exp(rng.normal(0.0, 1.0)))
    lam = float(rng.uniform(0.05, 0.95))
    weights = WeightVector.from_values([1.0 - lam, lam], renormalize_tol=1e-12)
    pair = (SpdMatrix.identity(instance.dim), SpdMatrix.scalar(instance.dim, x))
    solution = _solve(g, weights, pair, ITERATIVE_SOLVER)
    expected = rep_eval(RepFnQuery(g, weights.weights[1], x))
    deviation = float(np.max(np.abs(solution.entries - expected * np.eye(instance.dim))))
    return TrialResult(-deviation / expected)


@_evaluator("inversion_duality")
def _inversion_duality_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    inverses = tuple(spd_inverse(m) for m in instance.matrices)
    via_inverses = spd_inverse(_solve(g, instance.weights, inverses))
    via_adjoint = _solve(adjoint(g), instance.weights, instance.matrices)
    return TrialResult(-_relative_gap(via_inverses, via_adjoint))


@_evaluator("commuting_gap")
def _commuting_gap_trial(
    g: MonotoneGenerator, instance: TrialInstance, params: Mapping[str, Any]
) -> TrialResult:
    rng = instance.rng
    spread = params["log_condition"] / 2.0
    a = instance.matrices[0]
    b = SpdMatrix.from_spectrum(
        np.exp(rng.uniform(-spread, spread, instance.dim)), a.decomposition.basis
    )
    lam = float(rng.uniform(0.05, 0.95))
    weights = WeightVector.from_values([1.0 - lam, lam], renormalize_tol=1e-12)
    solution = _solve(g, weights, (a, b))
    try:
        quasi = quasi_arithmetic(weights, (a, b), g)
    except OutOfRangeError:
        return TrialResult(None)
    gap = _relative_gap(solution, quasi)
    return TrialResult(-gap, observations={"gap": gap})


def _witness(
    name: str,
    g: MonotoneGenerator,
    instance: TrialInstance,
    params: Mapping[str, Any],
    margin: float | None = None,
    error: str | None = None,
) -> Witness:
    return Witness(
        check=name,
        generator=g.spec,
        seed=instance.seed,
        weights=list(instance.weights.weights),
        matrices=instance.documents(),
        params=dict(params),
        margin=margin,
        error=error,
    )


def _run_trials(
    name: str,
    g: MonotoneGenerator,
    plan: TrialPlan,
    params: Mapping[str, Any] | None = None,
    kind: CheckKind = "assert",
    threshold: float | None = None,
) -> tuple[CheckOutcome, list[dict[str, float]]]:
    params = {"threshold": plan.tolerance if threshold is None else threshold, **(params or {})}
    evaluate = _EVALUATORS[name]
    salt = f"{name}:{g.spec}"
    violations = skipped = 0
    worst: float | None = None
    witness: Witness | None = None
    observations: list[dict[str, float]] = []

    for index in range(plan.trials):
        instance = draw_instance(plan, salt, index)
        try:
            result = evaluate(g, instance, params)
        except TRIAL_ERRORS as e:
            violations += 1
            logger.debug(f"{name}[{g}] trial {index} raised {type(e).__name__}: {e}")
            if witness is None:
                witness = _witness(name, g, instance, params, error=f"{type(e).__name__}: {e}")
            continue
        if result.margin is None:
            skipped += 1
            continue
        skipped += result.partial_skip
        if result.observations:
            observations.append(result.observations)
        worst = result.margin if worst is None else min(worst, result.margin)
        if result.margin < -params["threshold"]:
            violations += 1
            if witness is None or witness.margin is None or result.margin < witness.margin:
                witness = _witness(name, g, instance, params, margin=result.margin)

    outcome = CheckOutcome(
        name=name,
        generator=g.spec,
        kind=kind,
        status="violated" if violations else "ok",
        trials=plan.trials,
        violations=violations,
        skipped=skipped,
        worst_margin=worst,
        witness=witness,
        details={"threshold": params["threshold"]},
    )
    worst_text = "n/a" if worst is None else f"{worst:.3e}"
    logger.info(
        f"{outcome.label}: {'FAILED' if violations and kind == 'assert' else 'PASSED'} - "
        f"{violations}/{plan.trials} violations, {skipped} skipped, worst margin {worst_text}"
    )
    return outcome, observations


def _check_powers(p_list: Sequence[float]) -> list[float]:
    if not p_list or any(not p >= 1.0 for p in p_list):
        raise BadParameterError(f"deformation powers must be non-empty and >= 1, got {p_list}")
    return [float(p) for p in p_list]


def check_sign_lemma(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    """``Σ wᵢ g(Aᵢ) ≥ 0`` implies ``σ_g(ω; 𝔸) ≥ I``, and ``≤ 0`` implies ``≤ I``.

    Each trial tests the raw draw when it satisfies either hypothesis (draws
    that satisfy neither are counted as skipped) and two rescalings ``cAᵢ``
    that put the hypothesis exactly on its boundary.
    """
    return _run_trials("sign_lemma", g, plan)[0]


def check_bounds(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    """Harmonic mean ≤ ``σ_g(ω; 𝔸)`` ≤ arithmetic mean."""
    return _run_trials("bounds", g, plan)[0]


def pointwise_order_holds(
    g: MonotoneGenerator, f: MonotoneGenerator, grid: FloatArray = DEFAULT_GRID
) -> bool:
    """Whether ``g ≤ f`` on the scalar grid."""
    upper = f.eval(grid)
    return bool(np.all(g.eval(grid) <= upper + GRID_SLACK * np.maximum(1.0, np.abs(upper))))


def check_pointwise_order(
    g: MonotoneGenerator, f: MonotoneGenerator, plan: TrialPlan
) -> CheckOutcome:
    """``g ≤ f`` pointwise transfers to ``σ_g(ω; 𝔸) ≤ σ_f(ω; 𝔸)``.

    Raises:
        PrecheckFailedError: If ``g ≤ f`` fails on the grid ``[1e-6, 1e6]``.
    """
    if not pointwise_order_holds(g, f):
        raise PrecheckFailedError(f"{g} <= {f} fails on the scalar grid")
    outcome, _ = _run_trials("pointwise_order", g, plan, {"upper": f.spec})
    return outcome.model_copy(update={"details": {**outcome.details, "upper": f.spec}})


def check_ando_hiai_1(
    g: MonotoneGenerator, plan: TrialPlan, p_list: Sequence[float]
) -> CheckOutcome:
    """``σ_g(ω; 𝔸) ≤ I`` implies ``σ_{g_p}(ω; 𝔸ᵖ) ≤ I``, and likewise for ``≥``.

    Instances are normalized by congruence so that ``σ_g = I``, and also by the
    scalars ``1/λ_min`` and ``1/λ_max`` of the mean so that one hypothesis holds
    with a touching eigenvalue. ``details`` reports the largest deviation from
    ``f_{g_p,λ}(x) = f_λ(x^{1/p})^p`` on a scalar grid.
    """
    powers = _check_powers(p_list)
    outcome, _ = _run_trials("ando_hiai_1", g, plan, {"powers": powers})
    deviation = max(
        abs(_deformed_identity_gap(g, p, float(lam), float(x)))
        for p in powers
        for lam in SCALAR_LAMBDAS
        for x in SCALAR_POINTS
    )
    details = {**outcome.details, "powers": powers, "scalar_identity_error": deviation}
    return outcome.model_copy(update={"details": details})


def _deformed_identity_gap(g: MonotoneGenerator, p: float, lam: float, x: float) -> float:
    deformed = rep_eval(RepFnQuery(deform(g, p), lam, x))
    return deformed - rep_eval(RepFnQuery(g, lam, x ** (1.0 / p))) ** p


def classify_deformation(
    g: MonotoneGenerator, p_list: Sequence[float], grid: FloatArray = DEFAULT_GRID
) -> Direction:
    """Compare ``g_p`` with ``g`` on a scalar grid for every ``p``.

    Returns:
        ``"le"`` if ``g_p ≤ g``, ``"ge"`` if ``g_p ≥ g``, ``"equal"`` if both.

    Raises:
        InconclusiveError: If neither inequality holds on the grid.
    """
    below = above = True
    base = g.eval(grid)
    slack = GRID_SLACK * np.maximum(1.0, np.abs(base))
    for p in _check_powers(p_list):
        difference = deform(g, p).eval(grid) - base
        below &= bool(np.all(difference <= slack))
        above &= bool(np.all(difference >= -slack))
    if below and above:
        return "equal"
    if below:
        return "le"
    if above:
        return "ge"
    raise InconclusiveError(f"{g}: deformations are neither below nor above on the grid")


def scalar_condition_mismatches(
    g: MonotoneGenerator, p_list: Sequence[float], direction: Direction
) -> int:
    """Grid points ``(λ, x)`` where ``f_λ(x) − f_λ(x^{1/p})^p`` has the wrong sign.

    ``g_p ≤ g`` goes with a non-negative difference, ``g_p ≥ g`` with a
    non-positive one.
    """
    mismatches = 0
    for p in p_list:
        for lam in SCALAR_LAMBDAS:
            for x in SCALAR_POINTS:
                margin = scalar_ando_hiai_margin(g, p, float(lam), float(x))
                slack = 1e-9 * max(1.0, float(x))
                if (direction in ("le", "equal") and margin < -slack) or (
                    direction in ("ge", "equal") and margin > slack
                ):
                    mismatches += 1
    return mismatches


def check_ando_hiai_2(
    g: MonotoneGenerator, plan: TrialPlan, p_list: Sequence[float]
) -> CheckOutcome:
    """Same-generator Ando–Hiai implications, chosen by how ``g_p`` compares with ``g``.

    ``g_p ≤ g`` comes with ``σ_g(ω; 𝔸) ≥ I ⟹ σ_g(ω; 𝔸ᵖ) ≥ I``, and ``g_p ≥ g``
    with the reversed implication.

    Raises:
        InconclusiveError: If the scalar classification finds neither order.
    """
    powers = _check_powers(p_list)
    direction = classify_deformation(g, powers)
    mismatches = scalar_condition_mismatches(g, powers, direction)
    if mismatches:
        logger.warning(f"ando_hiai_2[{g}]: scalar condition fails at {mismatches} grid points")
    outcome, _ = _run_trials(
        "ando_hiai_2", g, plan, {"powers": powers, "direction": direction}
    )
    details = {
        **outcome.details,
        "powers": powers,
        "direction": direction,
        "scalar_condition_mismatches": mismatches,
    }
    return outcome.model_copy(update={"details": details})


def _ratio_summary(observations: list[dict[str, float]], tolerance: float) -> dict[str, Any]:
    if not observations:
        return {"evaluated": 0}
    frame = pl.DataFrame(observations)
    exceeding = frame.filter(pl.col("frobenius_ratio") > 1.0 + tolerance)
    return {
        "evaluated": frame.height,
        "max_ratio": frame["ratio"].max(),
        "mean_ratio": frame["ratio"].mean(),
        "median_ratio": frame["ratio"].median(),
        "p99_ratio": frame["ratio"].quantile(0.99),
        "max_frobenius_ratio": frame["frobenius_ratio"].max(),
        "frobenius_exceedances": exceeding.height,
    }


def conjecture_search(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    """Search for ``‖σ_g(ω; 𝔸)‖₂ > ‖g⁻¹(Σ wᵢ g(Aᵢ))‖₂``.

    Report-only: ratios above ``1 + tolerance`` are findings with a witness.
    Trials whose quasi-arithmetic mean leaves the range of ``g`` are skipped.
    """
    outcome, observations = _run_trials("conjecture_search", g, plan, kind="report")
    summary = _ratio_summary(observations, plan.tolerance)
    return outcome.model_copy(update={"details": {**outcome.details, **summary}})


def check_congruence(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    """``σ_g(ω; Xᵀ𝔸X) = Xᵀσ_g(ω; 𝔸)X`` for random invertible ``X``."""
    return _run_trials("congruence", g, plan, threshold=CONGRUENCE_RTOL)[0]


def check_monotonicity(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    return _run_trials("monotonicity", g, plan)[0]


def check_permutation_invariance(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    return _run_trials("permutation", g, plan, threshold=PERMUTATION_RTOL)[0]


def check_init_independence(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    """Iterations started at the arithmetic and harmonic means agree in Thompson distance."""
    return _run_trials("init_independence", g, plan, threshold=INIT_THOMPSON_TOL)[0]


def check_scalar_consistency(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    """``σ_g((1−λ, λ); I, xI) = f_λ(x)·I``."""
    return _run_trials("scalar_consistency", g, plan, threshold=SCALAR_RTOL)[0]


def check_inversion_duality(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    """``σ_g(ω; 𝔸⁻¹)⁻¹ = σ_{g*}(ω; 𝔸)`` with ``g*(x) = −g(1/x)``."""
    outcome, _ = _run_trials("inversion_duality", g, plan, threshold=DUALITY_RTOL)
    return outcome.model_copy(update={"details": {**outcome.details, "adjoint": adjoint(g).spec}})


def commuting_gap_report(g: MonotoneGenerator, plan: TrialPlan) -> CheckOutcome:
    """Relative gap between ``σ_g`` and the quasi-arithmetic mean on commuting pairs.

    The gap vanishes for log and power generators. Report-only.
    """
    outcome, observations = _run_trials(
        "commuting_gap", g, plan, {"log_condition": plan.log_condition}, kind="report"
    )
    gaps = pl.DataFrame(observations) if observations else None
    details = {
        **outcome.details,
        "evaluated": 0 if gaps is None else gaps.height,
        "max_gap": None if gaps is None else gaps["gap"].max(),
        "mean_gap": None if gaps is None else gaps["gap"].mean(),
    }
    return outcome.model_copy(update={"details": details})


def error_outcome(
    name: str, g: MonotoneGenerator, error: Exception, kind: CheckKind = "assert"
) -> CheckOutcome:
    """Outcome for a check that could not run at all."""
    status = "inconclusive" if isinstance(error, InconclusiveError) else "error"
    return CheckOutcome(
        name=name,
        generator=g.spec,
        kind=kind,
        status=status,
        details={"error": f"{type(error).__name__}: {error}"},
    )


def replay_witness(witness: Witness) -> float:
    """Evaluate the recorded trial again and return its margin.

    Raises:
        InconclusiveError: If the replayed trial no longer satisfies its hypothesis.
    """
    g = parse_generator_spec(witness.generator)
    instance = TrialInstance.from_documents(witness.seed, witness.weights, witness.matrices)
    result = _EVALUATORS[witness.check](g, instance, witness.params)
    if result.margin is None:
        raise InconclusiveError(f"replayed {witness.check} trial was skipped")
    return result.margin
