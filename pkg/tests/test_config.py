"""Tests for settings loaded from the environment."""

import pytest
from pydantic import ValidationError

from gke_means.config import GkeSettings, get_config


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    for name in (
        "GKE_VERIFY_TRIALS",
        "GKE_VERIFY_DIMS",
        "GKE_RESIDUAL_TOL",
        "GKE_OUTPUT_FORMAT",
        "GKE_REP_TOL",
        "GKE_SOLVER_STEP",
    ):
        monkeypatch.delenv(name, raising=False)


def test_defaults() -> None:
    settings = GkeSettings()
    plan = settings.trial_plan()
    assert plan.trials == 100
    assert plan.dims == (2, 3, 5)
    assert settings.solver_config().residual_tol == 1e-10
    assert settings.ando_hiai_powers == [1.5, 2.0, 3.0]


def test_environment_overrides(monkeypatch) -> None:
    monkeypatch.setenv("GKE_VERIFY_TRIALS", "7")
    monkeypatch.setenv("GKE_VERIFY_DIMS", "[2, 4]")
    monkeypatch.setenv("GKE_RESIDUAL_TOL", "1e-12")
    settings = get_config()
    assert settings.trial_plan().trials == 7
    assert settings.trial_plan().dims == (2, 4)
    assert settings.solver_config().residual_tol == 1e-12
    assert get_config() is settings


def test_dotenv_file(tmp_path) -> None:
    (tmp_path / ".env").write_text("GKE_OUTPUT_FORMAT=csv\nGKE_VERIFY_SEED=9\n")
    settings = GkeSettings()
    assert settings.output_format == "csv"
    assert settings.trial_plan().seed == 9


def test_overrides_skip_none() -> None:
    plan = GkeSettings().trial_plan(seed=None, trials=5, dims=(3,))
    assert plan.seed == 1
    assert plan.trials == 5
    assert plan.dims == (3,)
    solver = GkeSettings().solver_config(max_iterations=20)
    assert solver.max_iterations == 20


def test_invalid_values(monkeypatch) -> None:
    monkeypatch.setenv("GKE_VERIFY_TRIALS", "0")
    with pytest.raises(ValidationError):
        GkeSettings()
    monkeypatch.setenv("GKE_VERIFY_TRIALS", "3")
    with pytest.raises(ValidationError):
        GkeSettings().trial_plan(dims=(40,))


def test_solver_step_and_rep_tol_from_environment(monkeypatch) -> None:
    monkeypatch.setenv("GKE_SOLVER_STEP", "fixed_point")
    monkeypatch.setenv("GKE_REP_TOL", "1e-9")
    settings = GkeSettings()
    assert settings.solver_config().step == "fixed_point"
    assert settings.rep_tol == 1e-9
    monkeypatch.setenv("GKE_SOLVER_STEP", "secant")
    with pytest.raises(ValidationError):
        GkeSettings()
