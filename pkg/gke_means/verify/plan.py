"""Trial plans, witnesses and check outcomes."""

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gke_means.documents import MatrixDocument

CheckKind = Literal["assert", "report"]
CheckStatus = Literal["ok", "violated", "inconclusive", "error"]

MAX_DIM = 16


class TrialPlan(BaseModel):
    """How many random instances to draw, and of which shape."""

    model_config = ConfigDict(frozen=True)

    seed: int = 1
    trials: int = Field(default=100, ge=1)
    dims: tuple[int, ...] = (2, 3, 5)
    n_operators: tuple[int, ...] = (2, 3, 5)
    log_condition: float = Field(default=2.0, ge=0)
    tolerance: float = Field(default=1e-8, gt=0)

    @field_validator("dims")
    @classmethod
    def _check_dims(cls, dims: tuple[int, ...]) -> tuple[int, ...]:
        if not dims or any(not 1 <= d <= MAX_DIM for d in dims):
            raise ValueError(f"dims must be a non-empty subset of [1, {MAX_DIM}], got {dims}")
        return dims

    @field_validator("n_operators")
    @classmethod
    def _check_n_operators(cls, counts: tuple[int, ...]) -> tuple[int, ...]:
        if not counts or any(n < 1 for n in counts):
            raise ValueError(f"operator counts must be positive, got {counts}")
        return counts


class Witness(BaseModel):
    """Everything needed to replay one trial."""

    check: str
    generator: str
    seed: int
    weights: list[float]
    matrices: list[MatrixDocument]
    params: dict[str, Any] = Field(default_factory=dict)
    margin: float | None = None
    error: str | None = None


class CheckOutcome(BaseModel):
    """Aggregated result of one check over a trial plan.

    ``worst_margin`` is the most negative slack observed; a trial is a
    violation when its margin falls below minus the check's threshold or when
    the computation behind it raised.
    """

    name: str
    generator: str
    kind: CheckKind = "assert"
    status: CheckStatus = "ok"
    trials: int = Field(default=0, ge=0)
    violations: int = Field(default=0, ge=0)
    skipped: int = Field(default=0, ge=0)
    worst_margin: float | None = None
    witness: Witness | None = None
    details: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_counts(self) -> "CheckOutcome":
        if self.violations > self.trials:
            raise ValueError(f"{self.violations} violations exceed {self.trials} trials")
        if (self.witness is not None) != (self.violations > 0):
            raise ValueError("a witness is recorded exactly when there are violations")
        return self

    @property
    def passed(self) -> bool:
        return self.status in ("ok", "inconclusive")

    @property
    def failed(self) -> bool:
        """Assertion checks that were violated or errored."""
        return self.kind == "assert" and self.status in ("violated", "error")

    @property
    def label(self) -> str:
        return f"{self.name}[{self.generator}]"
