"""Tests for the randomized verification harness."""

from itertools import pairwise

import numpy as np
import polars as pl
import pytest
from pydantic import ValidationError

from gke_means.errors import BadParameterError, InconclusiveError, PrecheckFailedError
from gke_means.gke_solver import GkeProblem, WeightVector, quasi_arithmetic, solve_gke
from gke_means.monotone_fns import CATALOGUE, make_generator, parse_generator_spec
from gke_means.spd_core import SpdMatrix
from gke_means.verify import (
    CheckOutcome,
    TrialPlan,
    Witness,
    check_ando_hiai_1,
    check_ando_hiai_2,
    check_bounds,
    check_congruence,
    check_init_independence,
    check_inversion_duality,
    check_monotonicity,
    check_permutation_invariance,
    check_pointwise_order,
    check_scalar_consistency,
    check_sign_lemma,
    classify_deformation,
    commuting_gap_report,
    conjecture_search,
    replay_witness,
    run_property_suite,
    suite_entries,
    suite_exit_code,
    summary_frame,
)
from gke_means.verify import checks
from gke_means.verify.checks import error_outcome, pointwise_order_holds
from gke_means.verify.sampling import TrialInstance, draw_instance, trial_seed
from gke_means.verify.suite import POINTWISE_CHAIN, SuiteEntry, run_entry

ROOT = make_generator("power", 0.5)
MOEBIUS = make_generator("moebius")
LOG = make_generator("log")


@pytest.mark.parametrize(
    "overrides",
    [{"trials": 0}, {"dims": ()}, {"dims": (17,)}, {"n_operators": (0,)}, {"tolerance": 0.0}],
)
def test_plan_validation(overrides) -> None:
    with pytest.raises(ValidationError):
        TrialPlan(**overrides)


def test_trial_seeds_depend_on_every_component() -> None:
    base = trial_seed(1, "bounds:log", 0)
    assert base == trial_seed(1, "bounds:log", 0)
    assert len({base, trial_seed(2, "bounds:log", 0), trial_seed(1, "bounds:moebius", 0)}) == 3
    assert base != trial_seed(1, "bounds:log", 1)


def test_draw_instance_is_reproducible(small_plan) -> None:
    first = draw_instance(small_plan, "salt", 3)
    second = draw_instance(small_plan, "salt", 3)
    assert first.seed == second.seed
    assert first.weights == second.weights
    for a, b in zip(first.matrices, second.matrices, strict=True):
        np.testing.assert_array_equal(a.entries, b.entries)
    assert first.dim in small_plan.dims
    assert len(first.matrices) in small_plan.n_operators
    assert sum(first.weights.weights) == pytest.approx(1.0, abs=1e-12)


def test_instances_rebuild_exactly_from_documents(small_plan) -> None:
    instance = draw_instance(small_plan, "salt", 5)
    rebuilt = TrialInstance.from_documents(
        instance.seed, list(instance.weights.weights), instance.documents()
    )
    for a, b in zip(instance.matrices, rebuilt.matrices, strict=True):
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)


@pytest.mark.parametrize("check", [check_sign_lemma, check_bounds, check_monotonicity])
@pytest.mark.parametrize("g", [LOG, ROOT, MOEBIUS], ids=str)
def test_assertion_checks_pass(check, g, small_plan) -> None:
    outcome = check(g, small_plan)
    assert outcome.status == "ok", outcome
    assert outcome.trials == small_plan.trials
    assert outcome.witness is None
    assert not outcome.failed


@pytest.mark.parametrize(
    "check",
    [
        check_congruence,
        check_permutation_invariance,
        check_init_independence,
        check_scalar_consistency,
        check_inversion_duality,
    ],
)
@pytest.mark.parametrize("g", [ROOT, MOEBIUS], ids=str)
def test_invariance_checks_pass(check, g, small_plan) -> None:
    outcome = check(g, small_plan)
    assert outcome.status == "ok", outcome


def test_inversion_duality_names_the_adjoint(small_plan) -> None:
    outcome = check_inversion_duality(ROOT, small_plan)
    assert outcome.details["adjoint"] == "power:-0.5"


def test_pointwise_chain_and_precheck(small_plan) -> None:
    for lower, upper in pairwise(POINTWISE_CHAIN):
        assert pointwise_order_holds(lower, upper)
    outcome = check_pointwise_order(LOG, ROOT, small_plan)
    assert outcome.status == "ok"
    assert outcome.details["upper"] == "power:0.5"
    with pytest.raises(PrecheckFailedError):
        check_pointwise_order(ROOT, LOG, small_plan)


@pytest.mark.parametrize(
    ("spec", "direction"),
    [
        ("log", "equal"),
        ("power:0.5", "le"),
        ("sqrt2", "le"),
        ("power:-0.5", "ge"),
        ("reciprocal1", "ge"),
    ],
)
def test_classify_deformation(spec: str, direction: str) -> None:
    assert classify_deformation(parse_generator_spec(spec), [1.5, 2.0]) == direction


def test_moebius_deformations_are_unordered(small_plan) -> None:
    with pytest.raises(InconclusiveError):
        classify_deformation(MOEBIUS, [2.0])
    with pytest.raises(InconclusiveError):
        check_ando_hiai_2(MOEBIUS, small_plan, [2.0])
    entries = suite_entries(small_plan, [MOEBIUS], "ah2", [2.0])
    outcome = run_entry(entries[0])
    assert outcome.status == "inconclusive"
    assert outcome.passed
    assert not outcome.failed


def test_ando_hiai_checks(small_plan) -> None:
    first = check_ando_hiai_1(LOG, small_plan, [2.0])
    assert first.status == "ok", first
    assert first.details["scalar_identity_error"] <= 1e-8
    second = check_ando_hiai_2(ROOT, small_plan, [2.0])
    assert second.status == "ok", second
    assert second.details["direction"] == "le"
    assert second.details["scalar_condition_mismatches"] == 0
    with pytest.raises(BadParameterError):
        check_ando_hiai_1(LOG, small_plan, [0.5])
    with pytest.raises(BadParameterError):
        check_ando_hiai_2(LOG, small_plan, [])


def test_conjecture_search_is_report_only(small_plan) -> None:
    outcome = conjecture_search(MOEBIUS, small_plan)
    assert outcome.kind == "report"
    assert not outcome.failed
    assert outcome.details["evaluated"] + outcome.skipped == small_plan.trials
    assert outcome.details["max_ratio"] > 0.0


def test_commuting_gap_vanishes_for_log(small_plan) -> None:
    outcome = commuting_gap_report(LOG, small_plan)
    assert outcome.violations == 0
    assert outcome.details["max_gap"] <= 1e-8


def test_witness_replays_to_the_recorded_margin() -> None:
    plan = TrialPlan(seed=1, trials=20, tolerance=1e-12)
    outcome = commuting_gap_report(MOEBIUS, plan)
    assert outcome.violations > 0
    witness = outcome.witness
    assert witness is not None
    assert witness.margin is not None
    restored = Witness.model_validate_json(witness.model_dump_json())
    assert replay_witness(restored) == pytest.approx(witness.margin, abs=1e-12)


def test_outcome_validation() -> None:
    with pytest.raises(ValidationError):
        CheckOutcome(name="bounds", generator="log", trials=1, violations=2)
    with pytest.raises(ValidationError):
        CheckOutcome(name="bounds", generator="log", trials=1, violations=1)


def test_error_outcomes_and_exit_codes() -> None:
    inconclusive = error_outcome("ando_hiai_2", MOEBIUS, InconclusiveError("unordered"))
    broken = error_outcome("bounds", LOG, BadParameterError("bad"))
    report = error_outcome("conjecture_search", LOG, BadParameterError("bad"), kind="report")
    assert inconclusive.status == "inconclusive"
    assert broken.status == "error"
    assert broken.failed
    assert not report.failed
    assert suite_exit_code([inconclusive, report]) == 0
    assert suite_exit_code([inconclusive, broken]) == 1
    assert broken.label == "bounds[log]"


def test_suite_entries() -> None:
    plan = TrialPlan(trials=1)
    assert [e.name for e in suite_entries(plan, [LOG, ROOT], "bounds")] == ["bounds", "bounds"]
    conjecture = suite_entries(plan, [LOG], "conjecture")
    assert [e.name for e in conjecture] == ["conjecture_search"]
    everything = {e.name for e in suite_entries(plan, [LOG], "all")}
    assert {"commuting_gap", "sign_lemma", "pointwise_order", "inversion_duality"} <= everything
    order = suite_entries(plan, [LOG, MOEBIUS], "order", upper=make_generator("power", 1.0))
    assert [e.label for e in order] == ["pointwise_order[log]", "pointwise_order[moebius]"]
    with pytest.raises(BadParameterError):
        suite_entries(plan, [LOG], "nope")


def test_suite_runs_are_deterministic(small_plan) -> None:
    first = run_property_suite(small_plan, [ROOT, MOEBIUS], "bounds")
    second = run_property_suite(small_plan, [ROOT, MOEBIUS], "bounds")
    assert [o.model_dump() for o in first] == [o.model_dump() for o in second]
    assert suite_exit_code(first) == 0


def test_summary_frame(small_plan) -> None:
    outcomes = run_property_suite(small_plan, [LOG], "sign")
    frame = summary_frame(outcomes)
    assert frame.height == 1
    assert frame["name"].to_list() == ["sign_lemma"]
    empty = summary_frame([])
    assert empty.height == 0
    assert empty.schema["worst_margin"] == pl.Float64


@pytest.mark.parametrize("g", CATALOGUE, ids=str)
def test_sign_lemma_holds_across_the_catalogue(g) -> None:
    outcome = check_sign_lemma(g, TrialPlan(seed=1, trials=50))
    assert outcome.status == "ok", outcome
    assert outcome.violations == 0


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("g", CATALOGUE, ids=str)
def test_ando_hiai_1_holds_across_the_catalogue(g, p) -> None:
    outcome = check_ando_hiai_1(g, TrialPlan(seed=1, trials=100), [p])
    assert outcome.status == "ok", outcome
    assert outcome.violations == 0
    assert outcome.details["scalar_identity_error"] <= 1e-8


def test_numerical_errors_in_a_trial_become_violations(monkeypatch, small_plan) -> None:
    def broken(g, instance, params):
        raise ZeroDivisionError("pivot vanished")

    monkeypatch.setitem(checks._EVALUATORS, "bounds", broken)
    outcome = check_bounds(LOG, small_plan)
    assert outcome.violations == small_plan.trials
    assert outcome.status == "violated"
    assert "ZeroDivisionError: pivot vanished" in outcome.witness.error


def test_run_entry_turns_numerical_errors_into_error_outcomes() -> None:
    def broken() -> CheckOutcome:
        raise ValueError("rtol too small")

    outcome = run_entry(SuiteEntry("sign_lemma", LOG, broken))
    assert outcome.status == "error"
    assert outcome.failed
    assert outcome.details["error"] == "ValueError: rtol too small"


@pytest.mark.parametrize("spec", ["log", "power:0.25", "power:0.5", "power:1"])
def test_conjecture_ratio_stays_below_one_for_log_and_powers(spec) -> None:
    outcome = conjecture_search(parse_generator_spec(spec), TrialPlan(seed=2, trials=60))
    assert outcome.details["evaluated"] == 60
    assert outcome.details["max_ratio"] <= 1.0 + 1e-9
    assert outcome.violations == 0


@pytest.mark.parametrize("spec", ["log", "power:0.5", "power:-0.5", "power:1"])
def test_conjecture_ratio_is_one_on_commuting_inputs(spec) -> None:
    g = parse_generator_spec(spec)
    weights = WeightVector((0.2, 0.3, 0.5))
    matrices = tuple(
        SpdMatrix(np.diag(d)) for d in ([1.0, 4.0, 0.5], [3.0, 0.2, 2.0], [0.7, 9.0, 1.5])
    )
    solution = solve_gke(GkeProblem(weights, matrices, g)).solution
    quasi = quasi_arithmetic(weights, matrices, g)
    assert solution.norm / quasi.norm == pytest.approx(1.0, abs=1e-9)
