"""Solutions of the Generalized Karcher Equation.

For weights ``ω``, matrices ``𝔸`` and a generator ``g`` the mean ``σ_g(ω; 𝔸)``
is the unique SPD solution ``X`` of ``S(X) = Σᵢ wᵢ g(X^{-1/2} Aᵢ X^{-1/2}) = 0``.

The iterative solver starts from the weighted arithmetic mean and takes damped
steps ``X_{k+1} = X_k^{1/2} · M_k · X_k^{1/2}``. With ``step="newton"`` (the
default) ``M_k = exp(θ_k H_k)`` and ``H_k`` solves the linearization at ``H = 0``
of ``H ↦ Σᵢ wᵢ g(e^{-H/2} Cᵢ e^{-H/2})`` with ``Cᵢ = X_k^{-1/2} Aᵢ X_k^{-1/2}``.
Its derivative comes from the divided differences of ``g`` on the spectra of
the ``Cᵢ``. With ``step="fixed_point"`` ``M_k = g⁻¹(θ_k · S(X_k))``.

``θ_k`` is halved whenever the step leaves the domain or fails to reduce the
Frobenius norm of ``S``, and grows by 1.5 (capped at 1) after two accepted
steps in a row. The Frobenius norm of ``S`` at the returned point is the
convergence certificate.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike
from prefect.logging import get_logger
from pydantic import BaseModel, ConfigDict, Field

from gke_means.errors import (
    BadParameterError,
    DampingUnderflowError,
    DimMismatchError,
    DomainError,
    NoConvergenceError,
    NotSpdError,
    OutOfRangeError,
)
from gke_means.monotone_fns import GeneratorKind, MonotoneGenerator, make_generator
from gke_means.spd_core import (
    FloatArray,
    SpdMatrix,
    apply_scalar_function,
    apply_symmetric_function,
    spd_function,
    spd_inverse,
    spd_power,
    symmetrize,
)

logger = get_logger(__name__)

WEIGHT_SUM_TOL = 1e-12
DAMPING_FLOOR = 1e-8
DAMPING_GROWTH = 1.5
DIVIDED_DIFFERENCE_RTOL = 1e-8
KARCHER_LIMIT = 1e-8


@dataclass(frozen=True)
class WeightVector:
    """A probability vector with entries in ``(0, 1)`` (a single weight is 1)."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.weights, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise BadParameterError("weights must be a non-empty vector")
        if values.size == 1:
            if values[0] != 1.0:
                raise BadParameterError(f"a single weight must equal 1, got {values[0]}")
        elif np.any(values <= 0.0) or np.any(values >= 1.0):
            raise BadParameterError(f"weights must lie in (0, 1): {values.tolist()}")
        if abs(float(values.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise BadParameterError(f"weights must sum to 1, got {values.sum()!r}")
        object.__setattr__(self, "weights", tuple(float(w) for w in values))

    @classmethod
    def from_values(cls, values: ArrayLike, renormalize_tol: float = 0.0) -> "WeightVector":
        """Build from raw values, renormalizing when the sum is within ``renormalize_tol`` of 1."""
        raw = np.asarray(values, dtype=np.float64).ravel()
        total = float(raw.sum())
        if renormalize_tol > 0.0:
            if abs(total - 1.0) > renormalize_tol:
                raise BadParameterError(f"weights sum to {total!r}, not 1")
            raw = raw / total
            raw[-1] = 1.0 - float(raw[:-1].sum())
        return cls(tuple(raw.tolist()))

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls.from_values(np.full(n, 1.0 / n), renormalize_tol=1e-12)

    def __len__(self) -> int:
        return len(self.weights)

    def permuted(self, order: Sequence[int]) -> "WeightVector":
        return WeightVector(tuple(self.weights[i] for i in order))

    @property
    def array(self) -> FloatArray:
        return np.asarray(self.weights)


@dataclass(frozen=True)
class GkeProblem:
    """One instance ``(ω, 𝔸, g)`` of the Generalized Karcher Equation."""

    weights: WeightVector
    matrices: tuple[SpdMatrix, ...]
    generator: MonotoneGenerator

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrices", tuple(self.matrices))
        if not self.matrices:
            raise BadParameterError("a GKE problem needs at least one matrix")
        if len(self.matrices) != len(self.weights):
            raise DimMismatchError(
                f"{len(self.weights)} weights for {len(self.matrices)} matrices"
            )
        dims = {m.dim for m in self.matrices}
        if len(dims) != 1:
            raise DimMismatchError(f"matrices have different dimensions: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.matrices[0].dim

    def permuted(self, order: Sequence[int]) -> "GkeProblem":
        return GkeProblem(
            self.weights.permuted(order), tuple(self.matrices[i] for i in order), self.generator
        )


SolverStep = Literal["newton", "fixed_point"]


class SolverConfig(BaseModel):
    """Solver parameters."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    residual_tol: float = Field(default=1e-10, gt=0)
    max_iterations: int = Field(default=500, ge=1)
    initial_damping: float = Field(default=1.0, gt=0, le=1)
    initial_guess: SpdMatrix | None = None
    use_closed_forms: bool = True
    step: SolverStep = "newton"


@dataclass
class SolverReport:
    """A solution of the GKE together with its residual certificate."""

    solution: SpdMatrix
    residual: float
    iterations: int
    damping_history: list[float] = field(default_factory=list)
    method: str = "iterative"


def weighted_arithmetic_mean(weights: WeightVector, matrices: Sequence[SpdMatrix]) -> SpdMatrix:
    total = sum(w * m.entries for w, m in zip(weights.weights, matrices, strict=True))
    return SpdMatrix(symmetrize(total))


def weighted_harmonic_mean(weights: WeightVector, matrices: Sequence[SpdMatrix]) -> SpdMatrix:
    total = sum(
        w * spd_inverse(m).entries for w, m in zip(weights.weights, matrices, strict=True)
    )
    return spd_inverse(SpdMatrix(symmetrize(total)))


def _inner_ratio(a: SpdMatrix, b: SpdMatrix) -> tuple[FloatArray, SpdMatrix]:
    """Return ``A^{1/2}`` and ``A^{-1/2} B A^{-1/2}``."""
    if a.dim != b.dim:
        raise DimMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
    root = spd_function(a, np.sqrt).entries
    inv_root = apply_scalar_function(a, lambda w: w**-0.5)
    return root, SpdMatrix(symmetrize(inv_root @ b.entries @ inv_root))


def weighted_geometric_mean(a: SpdMatrix, b: SpdMatrix, lam: float) -> SpdMatrix:
    """``A♯_λB = A^{1/2}(A^{-1/2}BA^{-1/2})^λ A^{1/2}``."""
    root, ratio = _inner_ratio(a, b)
    return SpdMatrix(symmetrize(root @ spd_power(ratio, lam).entries @ root))


def two_variable_power_mean(a: SpdMatrix, b: SpdMatrix, lam: float, t: float) -> SpdMatrix:
    """``A^{1/2}[1−λ+λ(A^{-1/2}BA^{-1/2})ᵗ]^{1/t}A^{1/2}``; ``A♯_λB`` at ``t = 0``."""
    if t == 0.0:
        return weighted_geometric_mean(a, b, lam)
    root, ratio = _inner_ratio(a, b)
    middle = spd_function(ratio, lambda w: (1.0 - lam + lam * w**t) ** (1.0 / t))
    return SpdMatrix(symmetrize(root @ middle.entries @ root))


@dataclass
class _IterateState:
    point: SpdMatrix
    root: FloatArray
    gke_sum: FloatArray
    residual: float
    # eigenpairs of X^{-1/2} Aᵢ X^{-1/2}
    spectra: list[tuple[FloatArray, FloatArray]] = field(default_factory=list)


def _gke_sum(
    problem: GkeProblem, inv_root: FloatArray
) -> tuple[FloatArray, list[tuple[FloatArray, FloatArray]]]:
    g = problem.generator
    total = np.zeros((problem.dim, problem.dim))
    spectra = []
    for w, a in zip(problem.weights.weights, problem.matrices, strict=True):
        eigenvalues, basis = np.linalg.eigh(symmetrize(inv_root @ a.entries @ inv_root))
        with np.errstate(all="ignore"):
            values = g.eval(eigenvalues)
        if eigenvalues[0] <= 0.0 or not np.all(np.isfinite(values)):
            raise DomainError(f"{g} is not finite on spectrum {np.array2string(eigenvalues)}")
        total += w * ((basis * values) @ basis.T)
        spectra.append((eigenvalues, basis))
    return symmetrize(total), spectra


def _evaluate(problem: GkeProblem, point: SpdMatrix) -> _IterateState:
    if point.dim != problem.dim:
        raise DimMismatchError(f"point has dim {point.dim}, problem has dim {problem.dim}")
    root = apply_scalar_function(point, np.sqrt)
    inv_root = apply_scalar_function(point, lambda w: w**-0.5)
    gke_sum, spectra = _gke_sum(problem, inv_root)
    return _IterateState(
        point, root, gke_sum, float(np.linalg.norm(gke_sum, "fro")), spectra
    )


def residual(problem: GkeProblem, point: SpdMatrix) -> float:
    """Frobenius norm of ``Σᵢ wᵢ g(X^{-1/2} Aᵢ X^{-1/2})`` at ``X = point``."""
    return _evaluate(problem, point).residual


def _closed_form(problem: GkeProblem) -> tuple[str, SpdMatrix] | None:
    g, matrices, weights = problem.generator, problem.matrices, problem.weights
    if len(matrices) == 1:
        return "single", matrices[0]
    if g.kind is GeneratorKind.LOG and len(matrices) == 2:
        return "geometric", weighted_geometric_mean(matrices[0], matrices[1], weights.weights[1])
    if g.kind is GeneratorKind.POWER and g.parameter == 1.0:
        return "arithmetic", weighted_arithmetic_mean(weights, matrices)
    if (g.kind is GeneratorKind.POWER and g.parameter == -1.0) or (
        g.kind is GeneratorKind.RECIPROCAL1
    ):
        return "harmonic", weighted_harmonic_mean(weights, matrices)
    return None


def _divided_differences(g: MonotoneGenerator, eigenvalues: FloatArray) -> FloatArray:
    """Löwner matrix ``(g(λⱼ) − g(λₖ)) / (λⱼ − λₖ)``; ``g′`` where the λ coincide."""
    lam_j, lam_k = eigenvalues[:, None], eigenvalues[None, :]
    values = g.eval(eigenvalues)
    gap = lam_j - lam_k
    close = np.abs(gap) <= DIVIDED_DIFFERENCE_RTOL * np.maximum(lam_j, lam_k)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotients = (values[:, None] - values[None, :]) / gap
    return np.where(close, g.derivative(0.5 * (lam_j + lam_k)), quotients)


def _newton_direction(problem: GkeProblem, state: _IterateState) -> FloatArray:
    """``H`` with ``S + DS·H = 0`` for ``X ↦ X^{1/2} e^H X^{1/2}``.

    In the eigenbasis ``Uᵢ`` of ``Cᵢ`` the derivative acts entrywise:
    ``DS·H = −½ Σᵢ wᵢ Uᵢ[Γᵢ ∘ (λⱼ + λₖ) ∘ (UᵢᵀHUᵢ)]Uᵢᵀ``
    with ``Γᵢ`` the divided differences of ``g``. The operator is negative definite
    since ``g`` increases.
    """
    dim = problem.dim
    operator = np.zeros((dim * dim, dim * dim))
    for w, (eigenvalues, basis) in zip(problem.weights.weights, state.spectra, strict=True):
        weights = _divided_differences(problem.generator, eigenvalues)
        weights *= eigenvalues[:, None] + eigenvalues[None, :]
        frame = np.kron(basis, basis)
        operator += w * (frame * weights.ravel()) @ frame.T
    step = np.linalg.solve(symmetrize(operator), 2.0 * state.gke_sum.ravel())
    return symmetrize(step.reshape(dim, dim))


def _fixed_point_middle(
    g: MonotoneGenerator, state: _IterateState, theta: float
) -> FloatArray | None:
    eigenvalues, basis = np.linalg.eigh(theta * state.gke_sum)
    if not np.all(g.in_range(eigenvalues)):
        return None
    return symmetrize((basis * g.inverse(eigenvalues)) @ basis.T)


def _damped_step(
    problem: GkeProblem, state: _IterateState, theta: float, direction: FloatArray | None
) -> _IterateState | None:
    """Try one step with damping ``theta``; ``None`` if it leaves the domain.

    ``direction`` is a Newton direction, or ``None`` for the fixed-point step.
    """
    try:
        if direction is None:
            middle = _fixed_point_middle(problem.generator, state, theta)
            if middle is None:
                return None
        else:
            middle = apply_symmetric_function(theta * direction, np.exp)
        candidate = SpdMatrix(symmetrize(state.root @ middle @ state.root))
        return _evaluate(problem, candidate)
    except (NotSpdError, DomainError):
        return None


def _step_direction(
    problem: GkeProblem, state: _IterateState, config: SolverConfig
) -> FloatArray | None:
    if config.step == "fixed_point":
        return None
    try:
        return _newton_direction(problem, state)
    except np.linalg.LinAlgError:
        logger.debug(f"singular Newton system for {problem.generator}, taking a fixed-point step")
        return None


def _iterate(problem: GkeProblem, config: SolverConfig) -> SolverReport:
    start = config.initial_guess or weighted_arithmetic_mean(problem.weights, problem.matrices)
    state = _evaluate(problem, start)
    theta = config.initial_damping
    history: list[float] = []
    successes = 0

    for iteration in range(config.max_iterations):
        if state.residual <= config.residual_tol:
            return SolverReport(state.point, state.residual, iteration, history)
        direction = _step_direction(problem, state, config)
        while True:
            candidate = _damped_step(problem, state, theta, direction)
            if candidate is not None and candidate.residual < state.residual:
                break
            theta /= 2.0
            successes = 0
            if theta < DAMPING_FLOOR:
                logger.warning(
                    f"damping underflow for {problem.generator} after {iteration} iterations, "
                    f"residual {state.residual:.3e}"
                )
                raise DampingUnderflowError(
                    f"damping fell below {DAMPING_FLOOR:.0e} for {problem.generator}",
                    iterations=iteration,
                    residual=state.residual,
                )
        state = candidate
        history.append(theta)
        logger.debug(f"iteration {iteration + 1}: residual={state.residual:.3e} theta={theta}")
        successes += 1
        if successes == 2:
            theta = min(1.0, theta * DAMPING_GROWTH)
            successes = 0

    if state.residual <= config.residual_tol:
        return SolverReport(state.point, state.residual, config.max_iterations, history)
    logger.warning(
        f"no convergence for {problem.generator} in {config.max_iterations} iterations, "
        f"residual {state.residual:.3e}"
    )
    raise NoConvergenceError(
        f"GKE solver exhausted its budget for {problem.generator}",
        iterations=config.max_iterations,
        residual=state.residual,
    )


def solve_gke(problem: GkeProblem, config: SolverConfig | None = None) -> SolverReport:
    """Solve ``Σᵢ wᵢ g(X^{-1/2} Aᵢ X^{-1/2}) = 0``.

    Args:
        problem: Weights, matrices and generator.
        config: Solver parameters; defaults to :class:`SolverConfig()`.

    Returns:
        A report whose ``residual`` is at most ``config.residual_tol``.

    Raises:
        NoConvergenceError: If the iteration budget is exhausted.
        DampingUnderflowError: If the damping factor falls below ``1e-8``.
    """
    config = config or SolverConfig()
    if config.initial_guess is not None and config.initial_guess.dim != problem.dim:
        raise DimMismatchError(
            f"initial guess has dim {config.initial_guess.dim}, problem has dim {problem.dim}"
        )
    if config.use_closed_forms and (closed := _closed_form(problem)) is not None:
        name, solution = closed
        certificate = residual(problem, solution)
        if certificate <= config.residual_tol:
            return SolverReport(solution, certificate, 0, [], f"closed_form:{name}")
        logger.debug(f"closed form {name} residual {certificate:.3e}, iterating instead")
    return _iterate(problem, config)


def _as_problem(
    weights: WeightVector, matrices: Sequence[SpdMatrix], generator: MonotoneGenerator
) -> GkeProblem:
    return GkeProblem(weights, tuple(matrices), generator)


def karcher_mean(
    weights: WeightVector, matrices: Sequence[SpdMatrix], config: SolverConfig | None = None
) -> SolverReport:
    """Weighted Karcher mean, the GKE mean for ``g = log``."""
    return solve_gke(_as_problem(weights, matrices, make_generator(GeneratorKind.LOG)), config)


def power_mean(
    weights: WeightVector,
    matrices: Sequence[SpdMatrix],
    t: float,
    config: SolverConfig | None = None,
) -> SolverReport:
    """Weighted power mean ``P_t``; Karcher for ``|t| < 1e-8``, closed forms at ``t = ±1``."""
    if not -1.0 <= t <= 1.0:
        raise BadParameterError(f"power mean exponent must lie in [-1, 1], got {t}")
    if abs(t) < KARCHER_LIMIT:
        return karcher_mean(weights, matrices, config)
    problem = _as_problem(weights, matrices, make_generator(GeneratorKind.POWER, t))
    if abs(t) == 1.0:
        name = "arithmetic" if t > 0 else "harmonic"
        mean = weighted_arithmetic_mean if t > 0 else weighted_harmonic_mean
        solution = mean(weights, matrices)
        return SolverReport(solution, residual(problem, solution), 0, [], f"closed_form:{name}")
    return solve_gke(problem, config)


def quasi_arithmetic(
    weights: WeightVector, matrices: Sequence[SpdMatrix], generator: MonotoneGenerator
) -> SpdMatrix:
    """``g⁻¹(Σᵢ wᵢ g(Aᵢ))`` by functional calculus.

    Raises:
        OutOfRangeError: If the spectrum of the sum leaves the range of ``g``.
    """
    total = sum(
        w * apply_scalar_function(m, generator.eval)
        for w, m in zip(weights.weights, matrices, strict=True)
    )
    eigenvalues, basis = np.linalg.eigh(symmetrize(total))
    if not np.all(generator.in_range(eigenvalues)):
        raise OutOfRangeError(
            f"spectrum {np.array2string(eigenvalues)} leaves the range of {generator}"
        )
    return SpdMatrix.from_spectrum(generator.inverse(eigenvalues), basis)


def relative_entropy(a: SpdMatrix, b: SpdMatrix) -> FloatArray:
    """``S(A|B) = A^{1/2} log(A^{-1/2}BA^{-1/2}) A^{1/2}``."""
    root, ratio = _inner_ratio(a, b)
    return symmetrize(root @ apply_scalar_function(ratio, np.log) @ root)


def tsallis_entropy(a: SpdMatrix, b: SpdMatrix, t: float) -> FloatArray:
    """``T_t(A|B) = (A♯_tB − A)/t`` for ``t ∈ (0, 1]``."""
    if not 0.0 < t <= 1.0:
        raise BadParameterError(f"Tsallis parameter must lie in (0, 1], got {t}")
    root, ratio = _inner_ratio(a, b)
    middle = apply_scalar_function(ratio, lambda w: np.expm1(t * np.log(w)) / t)
    return symmetrize(root @ middle @ root)
