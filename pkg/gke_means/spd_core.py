"""Symmetric positive-definite matrices with spectral functional calculus.

Values are immutable: ``SpdMatrix`` validates symmetry and positivity on
construction, stores a read-only copy of its entries and caches its
eigendecomposition. Every matrix produced by an arithmetic composition is
re-symmetrized with ``(M + Mᵀ) / 2`` before it is used again.
"""

from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray
from prefect.logging import get_logger

from gke_means.errors import (
    BadParameterError,
    DimMismatchError,
    DomainError,
    NotSpdError,
    SingularTransformError,
)

logger = get_logger(__name__)

FloatArray = NDArray[np.float64]
ScalarFunction = Callable[[FloatArray], FloatArray]

SYMMETRY_RTOL = 1e-12
POSITIVITY_RTOL = 1e-12
MAX_TRANSFORM_CONDITION = 1e12


def symmetrize(matrix: ArrayLike) -> FloatArray:
    """Return ``(M + Mᵀ) / 2`` as a float array."""
    m = np.asarray(matrix, dtype=np.float64)
    return 0.5 * (m + m.T)


def _sandwich(outer: FloatArray, inner: FloatArray) -> FloatArray:
    return symmetrize(outer @ inner @ outer)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues in ascending order with orthonormal eigenvector columns."""

    eigenvalues: FloatArray
    basis: FloatArray

    def reconstruct(self) -> FloatArray:
        """Rebuild ``basis · diag(eigenvalues) · basisᵀ``."""
        return symmetrize((self.basis * self.eigenvalues) @ self.basis.T)


def _check_positive_spectrum(eigenvalues: FloatArray) -> None:
    dim = eigenvalues.shape[0]
    largest = float(eigenvalues[-1])
    if largest <= 0.0 or float(eigenvalues[0]) <= dim * POSITIVITY_RTOL * largest:
        raise NotSpdError(
            f"smallest eigenvalue {eigenvalues[0]:.3e} is not positive "
            f"relative to largest {largest:.3e}"
        )


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    """A symmetric positive-definite matrix.

    Construction raises :class:`NotSpdError` when the entries are not square,
    not finite, not symmetric within ``1e-12·max(1, max|M|)`` or when the
    smallest eigenvalue is at most ``dim·1e-12`` times the largest.
    """

    entries: FloatArray

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise NotSpdError(f"entries must be a non-empty square array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NotSpdError("entries must be finite")
        scale = max(1.0, float(np.max(np.abs(arr))))
        if float(np.max(np.abs(arr - arr.T))) > SYMMETRY_RTOL * scale:
            raise NotSpdError("entries are not symmetric")
        arr = symmetrize(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        _check_positive_spectrum(self.decomposition.eigenvalues)

    @classmethod
    def from_spectrum(cls, eigenvalues: ArrayLike, basis: ArrayLike) -> "SpdMatrix":
        """Build ``basis · diag(eigenvalues) · basisᵀ`` reusing the given decomposition."""
        values = np.asarray(eigenvalues, dtype=np.float64)
        vectors = np.asarray(basis, dtype=np.float64)
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
        _check_positive_spectrum(values)
        decomposition = SpectralDecomposition(values, vectors)
        instance = object.__new__(cls)
        instance.__dict__["decomposition"] = decomposition
        arr = decomposition.reconstruct()
        arr.setflags(write=False)
        object.__setattr__(instance, "entries", arr)
        return instance

    @classmethod
    def identity(cls, dim: int) -> "SpdMatrix":
        return cls.scalar(dim, 1.0)

    @classmethod
    def scalar(cls, dim: int, value: float) -> "SpdMatrix":
        return cls(value * np.eye(dim))

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> "SpdMatrix":
        """Build from ``{"dim": n, "entries": [[...]]}``."""
        entries = np.asarray(obj["entries"], dtype=np.float64)
        if entries.shape != (obj["dim"], obj["dim"]):
            raise NotSpdError(f"declared dim {obj['dim']} does not match entries {entries.shape}")
        return cls(entries)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @cached_property
    def decomposition(self) -> SpectralDecomposition:
        eigenvalues, basis = np.linalg.eigh(self.entries)
        return SpectralDecomposition(eigenvalues, basis)

    @property
    def eigenvalues(self) -> FloatArray:
        return self.decomposition.eigenvalues

    @property
    def norm(self) -> float:
        """Spectral norm, the largest eigenvalue."""
        return float(self.eigenvalues[-1])

    def to_json_obj(self) -> dict[str, Any]:
        return {"dim": self.dim, "entries": self.entries.tolist()}

    def __repr__(self) -> str:
        return f"SpdMatrix(dim={self.dim}, eigenvalues={np.array2string(self.eigenvalues)})"


MatrixLike = SpdMatrix | FloatArray


def _as_array(matrix: MatrixLike) -> FloatArray:
    if isinstance(matrix, SpdMatrix):
        return matrix.entries
    return symmetrize(matrix)


def _require_same_dim(a: MatrixLike, b: MatrixLike) -> None:
    shape_a, shape_b = _as_array(a).shape, _as_array(b).shape
    if shape_a != shape_b:
        raise DimMismatchError(f"dimension mismatch: {shape_a} vs {shape_b}")


def spectral_decompose(matrix: SpdMatrix) -> SpectralDecomposition:
    """Return the cached ascending eigendecomposition of ``matrix``."""
    return matrix.decomposition


def _evaluate_on_spectrum(phi: ScalarFunction, eigenvalues: FloatArray) -> FloatArray:
    with np.errstate(all="ignore"):
        values = np.asarray(phi(eigenvalues), dtype=np.float64)
    if values.shape != eigenvalues.shape or not np.all(np.isfinite(values)):
        raise DomainError(f"function is not finite on spectrum {np.array2string(eigenvalues)}")
    return values


def apply_symmetric_function(matrix: ArrayLike, phi: ScalarFunction) -> FloatArray:
    """Functional calculus on an arbitrary symmetric matrix."""
    eigenvalues, basis = np.linalg.eigh(symmetrize(matrix))
    values = _evaluate_on_spectrum(phi, eigenvalues)
    return symmetrize((basis * values) @ basis.T)


def apply_scalar_function(matrix: SpdMatrix, phi: ScalarFunction) -> FloatArray:
    """Return ``basis · diag(φ(λᵢ)) · basisᵀ`` using the cached decomposition."""
    decomposition = matrix.decomposition
    values = _evaluate_on_spectrum(phi, decomposition.eigenvalues)
    return symmetrize((decomposition.basis * values) @ decomposition.basis.T)


def spd_function(matrix: SpdMatrix, phi: ScalarFunction) -> SpdMatrix:
    """Functional calculus for a function positive on the spectrum of ``matrix``."""
    decomposition = matrix.decomposition
    values = _evaluate_on_spectrum(phi, decomposition.eigenvalues)
    return SpdMatrix.from_spectrum(values, decomposition.basis)


def spd_power(matrix: SpdMatrix, exponent: float) -> SpdMatrix:
    return spd_function(matrix, lambda w: w**exponent)


def spd_sqrt(matrix: SpdMatrix) -> SpdMatrix:
    return spd_function(matrix, np.sqrt)


def spd_inverse(matrix: SpdMatrix) -> SpdMatrix:
    return spd_function(matrix, np.reciprocal)


def spectral_norm(matrix: MatrixLike) -> float:
    """Largest absolute eigenvalue of a symmetric matrix."""
    if isinstance(matrix, SpdMatrix):
        return matrix.norm
    return float(np.max(np.abs(np.linalg.eigvalsh(symmetrize(matrix)))))


def congruence(matrix: SpdMatrix, transform: ArrayLike) -> SpdMatrix:
    """Return ``Xᵀ A X`` for an invertible ``X``."""
    x = np.asarray(transform, dtype=np.float64)
    if x.shape != (matrix.dim, matrix.dim):
        raise DimMismatchError(f"transform shape {x.shape} does not match dim {matrix.dim}")
    condition = float(np.linalg.cond(x))
    if not np.isfinite(condition) or condition >= MAX_TRANSFORM_CONDITION:
        raise SingularTransformError(f"transform condition number {condition:.3e} is too large")
    return SpdMatrix(symmetrize(x.T @ matrix.entries @ x))


def loewner_margin(a: MatrixLike, b: MatrixLike) -> float:
    """Smallest eigenvalue of ``B − A`` divided by ``max(1, ‖A‖₂, ‖B‖₂)``.

    Non-negative exactly when ``A ≤ B`` in the Löwner order.
    """
    _require_same_dim(a, b)
    scale = max(1.0, spectral_norm(a), spectral_norm(b))
    difference = _as_array(b) - _as_array(a)
    return float(np.linalg.eigvalsh(symmetrize(difference))[0]) / scale


def loewner_leq(a: MatrixLike, b: MatrixLike, tol: float = 0.0) -> bool:
    """``A ≤ B`` up to ``tol·max(1, ‖A‖₂, ‖B‖₂)``."""
    if tol < 0:
        raise BadParameterError(f"tolerance must be non-negative, got {tol}")
    return loewner_margin(a, b) >= -tol


def thompson_distance(a: SpdMatrix, b: SpdMatrix) -> float:
    """Spectral norm of ``log(A^{-1/2} B A^{-1/2})``."""
    _require_same_dim(a, b)
    relative = scipy.linalg.eigh(b.entries, a.entries, eigvals_only=True)
    return float(np.max(np.abs(np.log(relative))))


def random_orthogonal(dim: int, seed: int | np.random.Generator) -> FloatArray:
    """Haar-distributed orthogonal matrix via sign-corrected QR."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def random_invertible(
    dim: int, seed: int | np.random.Generator, log_condition: float = 1.0
) -> FloatArray:
    """Random invertible matrix with singular values spread over ``exp(log_condition)``."""
    rng = np.random.default_rng(seed)
    left, right = random_orthogonal(dim, rng), random_orthogonal(dim, rng)
    singular = np.exp(rng.uniform(-log_condition / 2, log_condition / 2, dim))
    return (left * singular) @ right.T


def random_spd(dim: int, log_condition: float, seed: int | np.random.Generator) -> SpdMatrix:
    """Reproducible SPD matrix with eigenvalue ratio ``exp(log_condition)``.

    Log-eigenvalues are uniform on ``[c − L/2, c + L/2]`` with both ends pinned,
    where ``c`` is a random centre and ``L = log_condition``. A zero spread gives a
    scalar multiple of the identity.
    """
    if dim < 1:
        raise BadParameterError(f"dim must be positive, got {dim}")
    if log_condition < 0:
        raise BadParameterError(f"log_condition must be non-negative, got {log_condition}")
    rng = np.random.default_rng(seed)
    centre = rng.normal(0.0, 0.5)
    if log_condition == 0.0 or dim == 1:
        return SpdMatrix.scalar(dim, float(np.exp(centre)))
    logs = rng.uniform(-log_condition / 2, log_condition / 2, dim)
    logs[0], logs[1] = -log_condition / 2, log_condition / 2
    return SpdMatrix.from_spectrum(np.exp(centre + logs), random_orthogonal(dim, rng))


def random_weights(n: int, seed: int | np.random.Generator, floor: float = 1e-3) -> FloatArray:
    """Flat-Dirichlet probability vector with every entry at least ``floor`` before renormalizing.

    A single weight is exactly 1.
    """
    if n < 1:
        raise BadParameterError(f"need at least one weight, got {n}")
    if n == 1:
        return np.ones(1)
    rng = np.random.default_rng(seed)
    values = np.maximum(rng.dirichlet(np.ones(n)), floor)
    values /= values.sum()
    values[-1] = 1.0 - float(values[:-1].sum())
    return values
