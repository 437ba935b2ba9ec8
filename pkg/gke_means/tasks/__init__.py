"""Prefect tasks for running verification checks."""

from gke_means.tasks.verify_tasks import aggregate_check_outcomes, run_check

__all__ = [
    "aggregate_check_outcomes",
    "run_check",
]
