from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from mhrlearn.dataset import FloatArray

SIMPLEX_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-10
PSD_TOLERANCE = 1e-8


class KernelSpecError(Exception):
    """Raised when kernel parameters fall outside their valid ranges."""


class AsymmetricMatrixError(Exception):
    """Raised when a matrix that must be symmetric is not, beyond tolerance."""


class NotPositiveSemidefiniteError(Exception):
    """Raised when a matrix has an eigenvalue below the negative PSD tolerance."""


class DimensionMismatchError(Exception):
    """Raised when matrices or weight vectors that are combined have incompatible sizes."""


class SimplexViolationError(Exception):
    """Raised when a weight vector is negative somewhere or does not sum to 1."""


class KernelFamily(IntEnum):
    LINEAR = 0
    GAUSSIAN_RBF = 1
    POLYNOMIAL = 2

    @classmethod
    def from_name(cls, name: str) -> "KernelFamily":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise KernelSpecError(f"unknown kernel family {name}, expected one of {[f.name.lower() for f in cls]}")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family and its parameters.

    A None bandwidth means "median pairwise distance of the view", fixed by `resolve()`. `scale` multiplies
    every kernel value and is set by `resolve()` when trace normalization is requested.
    """

    family: KernelFamily = KernelFamily.GAUSSIAN_RBF
    bandwidth: Optional[float] = None
    degree: int = 2
    offset: float = 1.0
    trace_normalize: bool = False
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise KernelSpecError(f"bandwidth must be > 0, got {self.bandwidth}")
        if self.degree < 1:
            raise KernelSpecError(f"degree must be >= 1, got {self.degree}")
        if self.offset < 0:
            raise KernelSpecError(f"offset must be >= 0, got {self.offset}")
        if not self.scale > 0:
            raise KernelSpecError(f"scale must be > 0, got {self.scale}")

    @property
    def is_resolved(self) -> bool:
        return self.family != KernelFamily.GAUSSIAN_RBF or self.bandwidth is not None

    def resolve(self, view: FloatArray) -> "KernelSpec":
        """Fix data-dependent parameters against the training view so the kernel can be rebuilt exactly later."""
        from mhrlearn.kernels.gram import evaluate_kernel, median_bandwidth

        resolved = self
        if not self.is_resolved:
            resolved = replace(resolved, bandwidth=median_bandwidth(view))
        if self.trace_normalize and self.scale == 1.0:
            trace = float(np.trace(evaluate_kernel(view, view, replace(resolved, scale=1.0))))
            if trace > 0:
                resolved = replace(resolved, scale=view.shape[0] / trace)
        return resolved


@dataclass(frozen=True)
class SimplexWeights:
    """Nonnegative weights summing to 1; used for both kernel weights and regularizer weights."""

    weights: FloatArray

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise SimplexViolationError("simplex weights must be a nonempty vector")
        if not np.all(np.isfinite(weights)) or (weights < 0).any():
            raise SimplexViolationError(f"simplex weights must be finite and nonnegative, got {weights}")
        if abs(weights.sum() - 1.0) > SIMPLEX_TOLERANCE:
            raise SimplexViolationError(f"simplex weights must sum to 1, got sum {weights.sum()!r}")
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, count: int) -> "SimplexWeights":
        return cls(np.full(count, 1.0 / count))

    @classmethod
    def vertex(cls, count: int, index: int) -> "SimplexWeights":
        weights = np.zeros(count)
        weights[index] = 1.0
        return cls(weights)

    def __len__(self) -> int:
        return int(self.weights.size)

    def __iter__(self) -> Iterator[float]:
        return iter(float(w) for w in self.weights)

    def __getitem__(self, index: int) -> float:
        return float(self.weights[index])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimplexWeights):
            return NotImplemented
        return bool(np.array_equal(self.weights, other.weights))

    def __hash__(self) -> int:
        return hash(self.weights.tobytes())


@dataclass(frozen=True)
class GramKernel:
    """A symmetric n x n kernel matrix built from one view, or combined from several with weights."""

    matrix: FloatArray
    source: Union[str, SimplexWeights]

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise DimensionMismatchError(f"kernel matrix must be square, got shape {self.matrix.shape}")
        self.matrix.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])


def ensure_same_size(matrices: Sequence[FloatArray], weights: Union[SimplexWeights, npt.ArrayLike]) -> Tuple[int, int]:
    """Validate a weighted combination's operands and return (n, count)."""
    if not matrices:
        raise DimensionMismatchError("nothing to combine")
    count = len(weights) if isinstance(weights, SimplexWeights) else len(np.asarray(weights))
    if count != len(matrices):
        raise DimensionMismatchError(f"{len(matrices)} matrices but {count} weights")
    n = matrices[0].shape[0]
    for matrix in matrices:
        if matrix.shape != (n, n):
            raise DimensionMismatchError(f"expected {n}x{n} matrices, got {matrix.shape}")
    return n, count
