"""JSON documents exchanged through files and standard output."""

from pathlib import Path
from typing import Any

from pydantic import BaseModel, TypeAdapter, ValidationError, model_validator

from gke_means.errors import NotSpdError, ParseError
from gke_means.spd_core import SpdMatrix


class MatrixDocument(BaseModel):
    """``{"dim": n, "entries": [[row-major reals]]}``."""

    dim: int
    entries: list[list[float]]

    @model_validator(mode="after")
    def _check_shape(self) -> "MatrixDocument":
        if self.dim < 1 or len(self.entries) != self.dim:
            raise ValueError(f"expected {self.dim} rows, got {len(self.entries)}")
        if any(len(row) != self.dim for row in self.entries):
            raise ValueError(f"every row must have {self.dim} entries")
        return self

    @classmethod
    def from_matrix(cls, matrix: SpdMatrix) -> "MatrixDocument":
        return cls(dim=matrix.dim, entries=matrix.entries.tolist())

    def to_matrix(self) -> SpdMatrix:
        return SpdMatrix.from_json_obj(self.model_dump())


_MATRIX_LIST = TypeAdapter(list[MatrixDocument])


def load_matrix_documents(path: str | Path) -> list[SpdMatrix]:
    """Read a JSON array of matrix objects and validate every matrix.

    Raises:
        ParseError: If the file is missing or not a JSON array of matrix objects.
        NotSpdError: If a matrix fails validation; ``index`` names its position.
    """
    try:
        documents = _MATRIX_LIST.validate_json(Path(path).read_bytes())
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    except ValidationError as e:
        raise ParseError(f"{path} is not a JSON array of matrix objects: {e}") from e
    matrices = []
    for index, document in enumerate(documents):
        try:
            matrices.append(document.to_matrix())
        except NotSpdError as e:
            raise NotSpdError(str(e), index=index) from e
    return matrices


def dump_matrix_documents(matrices: list[SpdMatrix]) -> bytes:
    return _MATRIX_LIST.dump_json([MatrixDocument.from_matrix(m) for m in matrices], indent=2)


class MeanDocument(BaseModel):
    """Output of the ``mean`` command."""

    generator: str
    solution: MatrixDocument
    residual: float
    iterations: int
    method: str


class EntropyDocument(BaseModel):
    """Output of the ``entropy`` command; the matrix is symmetric, not necessarily positive."""

    kind: str
    t: float | None
    matrix: list[list[float]]

    def model_post_init(self, context: Any) -> None:
        if any(len(row) != len(self.matrix) for row in self.matrix):
            raise ValueError("entropy matrix must be square")
