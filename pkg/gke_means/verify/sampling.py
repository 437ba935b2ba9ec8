"""Reproducible random trial instances.

Each trial draws from its own generator seeded by ``(plan seed, trial index,
check salt)``, so trials are independent of evaluation order.
"""

import zlib
from dataclasses import dataclass

import numpy as np

from gke_means.documents import MatrixDocument
from gke_means.gke_solver import WeightVector
from gke_means.spd_core import SpdMatrix, random_spd, random_weights
from gke_means.verify.plan import TrialPlan


def trial_seed(seed: int, salt: str, index: int) -> int:
    """Seed for trial ``index`` of the check identified by ``salt``."""
    sequence = np.random.SeedSequence([seed, index, zlib.crc32(salt.encode())])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class TrialInstance:
    """Weights and matrices of one trial, plus the seed it was drawn from."""

    seed: int
    weights: WeightVector
    matrices: tuple[SpdMatrix, ...]

    @property
    def dim(self) -> int:
        return self.matrices[0].dim

    @property
    def rng(self) -> np.random.Generator:
        """Auxiliary randomness for checks that need more than the instance itself."""
        return np.random.default_rng([self.seed, 1])

    def documents(self) -> list[MatrixDocument]:
        return [MatrixDocument.from_matrix(m) for m in self.matrices]

    @classmethod
    def from_documents(
        cls, seed: int, weights: list[float], matrices: list[MatrixDocument]
    ) -> "TrialInstance":
        return cls(
            seed, WeightVector(tuple(weights)), tuple(doc.to_matrix() for doc in matrices)
        )


def draw_instance(plan: TrialPlan, salt: str, index: int) -> TrialInstance:
    """Draw the ``index``-th instance of a check.

    Matrices are rebuilt from their entries so that a replay from a serialized
    witness sees the same eigendecompositions.
    """
    seed = trial_seed(plan.seed, salt, index)
    rng = np.random.default_rng(seed)
    dim = int(rng.choice(plan.dims))
    n = int(rng.choice(plan.n_operators))
    weights = WeightVector.from_values(random_weights(n, rng), renormalize_tol=1e-9)
    matrices = tuple(
        SpdMatrix(np.array(random_spd(dim, plan.log_condition, rng).entries)) for _ in range(n)
    )
    return TrialInstance(seed, weights, matrices)
