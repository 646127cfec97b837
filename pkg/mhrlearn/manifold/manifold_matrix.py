from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Sequence, Union

import numpy as np

from mhrlearn.dataset import FloatArray
from mhrlearn.kernels import SimplexWeights, weighted_sum


class ManifoldKind(IntEnum):
    NONE = 0
    LAPLACIAN = 1
    HESSIAN = 2

    @classmethod
    def from_name(cls, name: str) -> "ManifoldKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown manifold kind {name}, expected laplacian, hessian or none")


@dataclass(frozen=True)
class ManifoldMatrix:
    """A symmetric PSD regularizer matrix (graph Laplacian or Hessian energy) for one view or a weighted mix."""

    matrix: FloatArray
    kind: ManifoldKind
    source: Union[str, SimplexWeights]
    intrinsic_dim: Optional[int] = None

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"manifold matrix must be square, got shape {self.matrix.shape}")
        self.matrix.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    def energy(self, f: FloatArray) -> float:
        """The quadratic form f^T M f."""
        return float(f @ self.matrix @ f)

    @classmethod
    def zeros(cls, n: int, source: str = "") -> "ManifoldMatrix":
        return cls(matrix=np.zeros((n, n)), kind=ManifoldKind.NONE, source=source)


def combine_manifolds(mats: Sequence[ManifoldMatrix], beta: SimplexWeights) -> ManifoldMatrix:
    """The multiview regularizer sum_j beta_j M_j."""
    if not isinstance(beta, SimplexWeights):
        beta = SimplexWeights(np.asarray(beta))
    kinds = {m.kind for m in mats}
    kind = kinds.pop() if len(kinds) == 1 else ManifoldKind.NONE
    return ManifoldMatrix(matrix=weighted_sum([m.matrix for m in mats], beta), kind=kind, source=beta)
