"""Verification checks as Prefect tasks."""

from typing import Any

from prefect import task
from prefect.cache_policies import NO_CACHE
from prefect.logging import get_run_logger

from gke_means.verify.plan import CheckOutcome
from gke_means.verify.suite import SuiteEntry, run_entry


@task(name="run-check", retries=0, cache_policy=NO_CACHE)
def run_check(entry: SuiteEntry) -> CheckOutcome:
    """Run one suite entry.

    Args:
        entry: The check bound to its generator and trial plan.

    Returns:
        CheckOutcome; library errors are reported as ``error`` or ``inconclusive``.
    """
    logger = get_run_logger()
    logger.info(f"Running {entry.label}")

    outcome = run_entry(entry)

    if outcome.kind == "report":
        msg = f"{outcome.violations} findings in {outcome.trials} trials"
    else:
        msg = f"{outcome.violations}/{outcome.trials} violations, status {outcome.status}"
    logger.info(f"{entry.label}: {'FAILED' if outcome.failed else 'PASSED'} - {msg}")
    return outcome


@task(name="aggregate-check-outcomes", cache_policy=NO_CACHE)
def aggregate_check_outcomes(outcomes: list[CheckOutcome]) -> dict[str, Any]:
    """Aggregate all check outcomes into a summary.

    Args:
        outcomes: Outcomes of the individual checks.

    Returns:
        Dictionary with aggregated suite summary.
    """
    logger = get_run_logger()

    all_passed = not any(o.failed for o in outcomes)
    failed_count = sum(1 for o in outcomes if o.failed)
    passed_count = len(outcomes) - failed_count

    summary: dict[str, Any] = {
        "all_passed": all_passed,
        "total_checks": len(outcomes),
        "passed_count": passed_count,
        "failed_count": failed_count,
        "inconclusive_count": sum(1 for o in outcomes if o.status == "inconclusive"),
        "report_findings": sum(o.violations for o in outcomes if o.kind == "report"),
        "checks": [
            {
                "name": o.label,
                "passed": not o.failed,
                "status": o.status,
                "violations": o.violations,
            }
            for o in outcomes
        ],
    }

    if all_passed:
        logger.info(f"All {len(outcomes)} checks PASSED")
    else:
        failed_checks = [o.label for o in outcomes if o.failed]
        logger.warning(
            f"Suite FAILED: {failed_count}/{len(outcomes)} checks failed: {failed_checks}"
        )

    return summary
