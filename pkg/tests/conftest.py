"""Shared fixtures."""

import numpy as np
import pytest
from prefect.testing.utilities import prefect_test_harness

from gke_means.config import get_config
from gke_means.spd_core import SpdMatrix, random_spd
from gke_means.verify.plan import TrialPlan


@pytest.fixture(scope="session")
def prefect_harness():
    """Temporary Prefect backend for flow and task runs."""
    with prefect_test_harness():
        yield


@pytest.fixture(autouse=True)
def _fresh_settings():
    get_config.cache_clear()
    yield
    get_config.cache_clear()


@pytest.fixture
def spd_pair() -> tuple[SpdMatrix, SpdMatrix]:
    return random_spd(4, 2.0, 11), random_spd(4, 2.0, 12)


@pytest.fixture
def spd_triple() -> tuple[SpdMatrix, SpdMatrix, SpdMatrix]:
    return random_spd(3, 2.0, 21), random_spd(3, 2.0, 22), random_spd(3, 2.0, 23)


@pytest.fixture
def small_plan() -> TrialPlan:
    return TrialPlan(seed=3, trials=8, dims=(2, 3), n_operators=(2, 3))


@pytest.fixture
def log_grid() -> np.ndarray:
    return np.geomspace(1e-3, 1e3, 50)
