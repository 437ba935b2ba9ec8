"""Property-suite flow: every check across the generator catalogue."""

from dataclasses import dataclass, field
from typing import Any

from prefect import flow, serve
from prefect.logging import get_run_logger

from gke_means.config import GkeSettings, get_config
from gke_means.monotone_fns import CATALOGUE, parse_generator_spec
from gke_means.tasks.verify_tasks import aggregate_check_outcomes, run_check
from gke_means.verify.plan import CheckOutcome, TrialPlan
from gke_means.verify.suite import suite_entries, suite_exit_code

# suite -> hour (UTC) of its nightly run; conjecture runs are report-only
NIGHTLY_SCHEDULE = {"sign": 1, "bounds": 1, "order": 2, "ah1": 3, "ah2": 4, "invariants": 5}


@dataclass
class SuiteResult:
    """Result of a property-suite run."""

    success: bool
    exit_code: int
    plan: TrialPlan
    outcomes: list[CheckOutcome] = field(default_factory=list)
    summary: dict[str, Any] | None = None


@flow(name="gke-property-suite", flow_run_name="property_suite", log_prints=True)
def property_suite_pipeline(
    suite: str = "all",
    generators: list[str] | None = None,
    seed: int | None = None,
    trials: int | None = None,
    tolerance: float | None = None,
    powers: list[float] | None = None,
    upper: str | None = None,
) -> SuiteResult:
    """Run a verification suite with every check submitted as a task.

    Args:
        suite: Suite name (``all``, ``sign``, ``bounds``, ``order``, ``ah1``,
            ``ah2``, ``conjecture`` or ``invariants``).
        generators: Generator specs (defaults to the catalogue).
        seed: Plan seed (overrides config).
        trials: Trials per check (overrides config).
        tolerance: Löwner tolerance (overrides config).
        powers: Deformation powers for the Ando–Hiai checks (overrides config).
        upper: Upper generator spec for the ``order`` suite.

    Returns:
        SuiteResult whose outcomes follow the suite's fixed order.
    """
    logger = get_run_logger()
    config = get_config()

    plan = config.trial_plan(seed=seed, trials=trials, tolerance=tolerance)
    selected = [parse_generator_spec(spec) for spec in generators] if generators else CATALOGUE
    p_list = powers or config.ando_hiai_powers
    upper_generator = parse_generator_spec(upper) if upper else None

    logger.info("=" * 60)
    logger.info("GKE PROPERTY SUITE")
    logger.info("=" * 60)
    logger.info(f"Suite: {suite}")
    logger.info(f"Generators: {[g.spec for g in selected]}")
    logger.info(f"Plan: {plan.model_dump()}")
    logger.info("=" * 60)

    entries = suite_entries(plan, selected, suite, p_list, upper_generator)
    futures = [run_check.submit(entry) for entry in entries]
    outcomes = [future.result() for future in futures]

    summary = aggregate_check_outcomes(outcomes)
    exit_code = suite_exit_code(outcomes)
    if exit_code:
        logger.error(f"Suite failed: {summary['failed_count']} checks failed")
    else:
        logger.info("All assertion checks PASSED")

    return SuiteResult(
        success=exit_code == 0,
        exit_code=exit_code,
        plan=plan,
        outcomes=outcomes,
        summary=summary,
    )


def nightly_parameters(settings: GkeSettings | None = None) -> dict[str, dict[str, Any]]:
    """Flow parameters of every nightly deployment, keyed by suite."""
    settings = settings or get_config()
    parameters = {}
    for suite in NIGHTLY_SCHEDULE:
        values: dict[str, Any] = {"suite": suite, "trials": settings.verify_trials}
        if suite.startswith("ah"):
            values["powers"] = settings.ando_hiai_powers
        parameters[suite] = values
    return parameters


def serve_nightly() -> None:
    """Serve one scheduled deployment per suite until interrupted."""
    deployments = [
        property_suite_pipeline.to_deployment(
            name=f"gke-{suite}-nightly",
            tags=["gke", "verification", suite],
            parameters=parameters,
            cron=f"0 {NIGHTLY_SCHEDULE[suite]} * * *",
        )
        for suite, parameters in nightly_parameters().items()
    ]
    serve(*deployments)


if __name__ == "__main__":
    result = property_suite_pipeline(suite="bounds", trials=10)
    print(f"Suite result: exit code {result.exit_code}")
