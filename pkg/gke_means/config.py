"""Configuration management for gke-means."""

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from gke_means.gke_solver import SolverConfig, SolverStep
from gke_means.verify.plan import TrialPlan


class GkeSettings(BaseSettings):
    """Defaults for the solver, the representing functions and the verification harness.

    All settings are loaded from environment variables prefixed with ``GKE_``
    or from a ``.env`` file.
    """

    model_config = SettingsConfigDict(
        env_prefix="GKE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Solver
    residual_tol: float = Field(default=1e-10, gt=0)
    max_iterations: int = Field(default=500, ge=1)
    initial_damping: float = Field(default=1.0, gt=0, le=1)
    solver_step: SolverStep = "newton"

    # Representing functions
    rep_tol: float = Field(default=1e-12, gt=0)

    # Verification
    verify_seed: int = 1
    verify_trials: int = Field(default=100, ge=1)
    verify_dims: list[int] = [2, 3, 5]
    verify_n_operators: list[int] = [2, 3, 5]
    verify_log_condition: float = Field(default=2.0, ge=0)
    verify_tolerance: float = Field(default=1e-8, gt=0)
    ando_hiai_powers: list[float] = [1.5, 2.0, 3.0]

    # Output
    output_format: Literal["json", "csv"] = "json"

    def solver_config(self, **overrides: object) -> SolverConfig:
        """Build a :class:`SolverConfig` from these settings."""
        values = {
            "residual_tol": self.residual_tol,
            "max_iterations": self.max_iterations,
            "initial_damping": self.initial_damping,
            "step": self.solver_step,
        }
        return SolverConfig.model_validate(values | overrides)

    def trial_plan(self, **overrides: object) -> TrialPlan:
        """Build a :class:`TrialPlan` from these settings; ``None`` overrides are ignored."""
        values = {
            "seed": self.verify_seed,
            "trials": self.verify_trials,
            "dims": tuple(self.verify_dims),
            "n_operators": tuple(self.verify_n_operators),
            "log_condition": self.verify_log_condition,
            "tolerance": self.verify_tolerance,
        }
        values |= {key: value for key, value in overrides.items() if value is not None}
        return TrialPlan.model_validate(values)


@lru_cache
def get_config() -> GkeSettings:
    """Get the cached configuration instance."""
    return GkeSettings()
