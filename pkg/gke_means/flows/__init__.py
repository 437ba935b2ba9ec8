"""Prefect flows for gke-means."""

from gke_means.flows.property_suite_flow import (
    SuiteResult,
    nightly_parameters,
    property_suite_pipeline,
    serve_nightly,
)

__all__ = [
    "SuiteResult",
    "nightly_parameters",
    "property_suite_pipeline",
    "serve_nightly",
]
