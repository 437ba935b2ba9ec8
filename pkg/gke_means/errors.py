"""Error hierarchy for gke-means.

Every error raised by the library derives from :class:`GkeMeansError`. Errors that
describe bad input also derive from :class:`ValueError`.
"""


class GkeMeansError(Exception):
    """Base class for all gke-means errors."""


class NotSpdError(GkeMeansError, ValueError):
    """A matrix failed the symmetric positive-definite checks."""

    def __init__(self, message: str, index: int | None = None) -> None:
        if index is not None:
            message = f"matrix {index}: {message}"
        super().__init__(message)
        self.index = index


class DomainError(GkeMeansError, ValueError):
    """A scalar function is undefined or non-finite on part of a spectrum."""


class SingularTransformError(GkeMeansError, ValueError):
    """A congruence transform is numerically singular."""


class DimMismatchError(GkeMeansError, ValueError):
    """Operands have different dimensions."""


class BadParameterError(GkeMeansError, ValueError):
    """A generator or solver parameter is outside its admissible set."""


class OutOfRangeError(GkeMeansError, ValueError):
    """An argument escapes the open range of a generator."""


class NoConvergenceError(GkeMeansError):
    """An iterative method exhausted its budget."""

    def __init__(self, message: str, iterations: int, residual: float) -> None:
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class DampingUnderflowError(NoConvergenceError):
    """The solver's damping factor fell below its floor."""


class PrecheckFailedError(GkeMeansError):
    """A scalar precheck refuted the hypothesis of a matrix check."""


class InconclusiveError(GkeMeansError):
    """A scalar classification could not decide a direction."""


class ParseError(GkeMeansError, ValueError):
    """An input document or spec string could not be parsed."""
