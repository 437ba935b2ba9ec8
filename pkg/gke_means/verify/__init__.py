"""Numerical verification of inequalities for GKE means."""

from gke_means.verify.checks import (
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
)
from gke_means.verify.plan import CheckOutcome, TrialPlan, Witness
from gke_means.verify.suite import (
    SuiteEntry,
    SuiteReport,
    run_property_suite,
    suite_entries,
    suite_exit_code,
    suite_report,
    summary_frame,
)

__all__ = [
    "CheckOutcome",
    "SuiteEntry",
    "SuiteReport",
    "TrialPlan",
    "Witness",
    "check_ando_hiai_1",
    "check_ando_hiai_2",
    "check_bounds",
    "check_congruence",
    "check_init_independence",
    "check_inversion_duality",
    "check_monotonicity",
    "check_permutation_invariance",
    "check_pointwise_order",
    "check_scalar_consistency",
    "check_sign_lemma",
    "classify_deformation",
    "commuting_gap_report",
    "conjecture_search",
    "replay_witness",
    "run_property_suite",
    "suite_entries",
    "suite_exit_code",
    "suite_report",
    "summary_frame",
]
