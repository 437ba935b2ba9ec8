"""Bundles of checks across the generator catalogue."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import partial
from itertools import pairwise
from typing import Literal, get_args

import polars as pl
from prefect.logging import get_logger
from pydantic import BaseModel

from gke_means.errors import BadParameterError
from gke_means.monotone_fns import CATALOGUE, GeneratorKind, MonotoneGenerator, make_generator
from gke_means.verify import checks
from gke_means.verify.plan import CheckKind, CheckOutcome, TrialPlan

logger = get_logger(__name__)

SuiteName = Literal["all", "sign", "bounds", "order", "ah1", "ah2", "conjecture", "invariants"]
SUITES: tuple[str, ...] = get_args(SuiteName)

DEFAULT_POWERS = (1.5, 2.0, 3.0)

POINTWISE_CHAIN: tuple[MonotoneGenerator, ...] = (
    make_generator(GeneratorKind.RECIPROCAL1),
    make_generator(GeneratorKind.POWER, -0.5),
    make_generator(GeneratorKind.LOG),
    make_generator(GeneratorKind.POWER, 0.5),
    make_generator(GeneratorKind.POWER, 1.0),
)

_INVARIANT_CHECKS: dict[str, Callable[[MonotoneGenerator, TrialPlan], CheckOutcome]] = {
    "congruence": checks.check_congruence,
    "monotonicity": checks.check_monotonicity,
    "permutation": checks.check_permutation_invariance,
    "init_independence": checks.check_init_independence,
    "scalar_consistency": checks.check_scalar_consistency,
    "inversion_duality": checks.check_inversion_duality,
}


@dataclass(frozen=True)
class SuiteEntry:
    """One check bound to its generator and arguments."""

    name: str
    generator: MonotoneGenerator
    run: Callable[[], CheckOutcome]
    kind: CheckKind = "assert"

    @property
    def label(self) -> str:
        return f"{self.name}[{self.generator}]"


class SuiteReport(BaseModel):
    """JSON document emitted by a suite run."""

    plan: TrialPlan
    passed: bool
    outcomes: list[CheckOutcome]


def _order_entries(
    plan: TrialPlan, generators: Sequence[MonotoneGenerator], upper: MonotoneGenerator | None
) -> list[SuiteEntry]:
    if upper is not None:
        pairs = [(g, upper) for g in generators]
    else:
        pairs = list(pairwise(POINTWISE_CHAIN))
    return [
        SuiteEntry("pointwise_order", g, partial(checks.check_pointwise_order, g, f, plan))
        for g, f in pairs
    ]


def suite_entries(
    plan: TrialPlan,
    generators: Sequence[MonotoneGenerator] = CATALOGUE,
    suite: str = "all",
    p_list: Sequence[float] = DEFAULT_POWERS,
    upper: MonotoneGenerator | None = None,
) -> list[SuiteEntry]:
    """List the checks a suite runs, in a fixed order.

    ``order`` compares every generator with ``upper`` when given, otherwise it
    walks the pointwise chain reciprocal1 ≤ power(-1/2) ≤ log ≤ power(1/2) ≤ power(1).

    Raises:
        BadParameterError: If ``suite`` is unknown.
    """
    if suite not in SUITES:
        raise BadParameterError(f"unknown suite {suite!r}; expected one of {SUITES}")
    selected = set(SUITES[1:]) if suite == "all" else {suite}
    entries: list[SuiteEntry] = []
    for g in generators:
        if "sign" in selected:
            entries.append(SuiteEntry("sign_lemma", g, partial(checks.check_sign_lemma, g, plan)))
        if "bounds" in selected:
            entries.append(SuiteEntry("bounds", g, partial(checks.check_bounds, g, plan)))
        if "ah1" in selected:
            run = partial(checks.check_ando_hiai_1, g, plan, p_list)
            entries.append(SuiteEntry("ando_hiai_1", g, run))
        if "ah2" in selected:
            run = partial(checks.check_ando_hiai_2, g, plan, p_list)
            entries.append(SuiteEntry("ando_hiai_2", g, run))
        if "invariants" in selected:
            entries.extend(
                SuiteEntry(name, g, partial(check, g, plan))
                for name, check in _INVARIANT_CHECKS.items()
            )
        if "conjecture" in selected:
            run = partial(checks.conjecture_search, g, plan)
            entries.append(SuiteEntry("conjecture_search", g, run, kind="report"))
            if suite == "all":
                run = partial(checks.commuting_gap_report, g, plan)
                entries.append(SuiteEntry("commuting_gap", g, run, kind="report"))
    if "order" in selected:
        entries.extend(_order_entries(plan, generators, upper))
    return entries


def run_entry(entry: SuiteEntry) -> CheckOutcome:
    """Run one entry; raised errors become ``error`` or ``inconclusive`` outcomes."""
    try:
        return entry.run()
    except checks.TRIAL_ERRORS as e:
        logger.warning(f"{entry.label}: {type(e).__name__} - {e}")
        return checks.error_outcome(entry.name, entry.generator, e, entry.kind)


def run_property_suite(
    plan: TrialPlan,
    generators: Sequence[MonotoneGenerator] = CATALOGUE,
    suite: str = "all",
    p_list: Sequence[float] = DEFAULT_POWERS,
    upper: MonotoneGenerator | None = None,
) -> list[CheckOutcome]:
    """Run a suite sequentially; the result depends only on its arguments."""
    entries = suite_entries(plan, generators, suite, p_list, upper)
    logger.info(f"Running {len(entries)} checks with seed {plan.seed}, {plan.trials} trials each")
    return [run_entry(entry) for entry in entries]


def suite_exit_code(outcomes: Sequence[CheckOutcome]) -> int:
    """1 when an assertion check was violated or errored, else 0."""
    return 1 if any(outcome.failed for outcome in outcomes) else 0


def suite_report(plan: TrialPlan, outcomes: Sequence[CheckOutcome]) -> SuiteReport:
    return SuiteReport(plan=plan, passed=suite_exit_code(outcomes) == 0, outcomes=list(outcomes))


def summary_frame(outcomes: Sequence[CheckOutcome]) -> pl.DataFrame:
    """One row per outcome."""
    return pl.DataFrame(
        [
            {
                "name": o.name,
                "generator": o.generator,
                "kind": o.kind,
                "status": o.status,
                "trials": o.trials,
                "violations": o.violations,
                "skipped": o.skipped,
                "worst_margin": o.worst_margin,
            }
            for o in outcomes
        ],
        schema={
            "name": pl.String,
            "generator": pl.String,
            "kind": pl.String,
            "status": pl.String,
            "trials": pl.Int64,
            "violations": pl.Int64,
            "skipped": pl.Int64,
            "worst_margin": pl.Float64,
        },
    )
