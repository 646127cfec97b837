import math
from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from more_itertools import divide
from scipy.linalg import svd

from mhrlearn.dataset import FloatArray, IntArray
from mhrlearn.kernels import repair_psd
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold.manifold_matrix import ManifoldKind, ManifoldMatrix
from mhrlearn.manifold.neighbors import NeighborCountError, NeighborGraph

logger = mhrlearn_logger.getChild(__file__)

# Post-orthogonalization column norm below which a neighborhood counts as degenerate
DEGENERATE_COLUMN_NORM = 1e-10
DEFAULT_DIM_THRESHOLD = 0.95


def quadratic_term_count(m: int) -> int:
    return m * (m + 1) // 2


def minimum_neighbor_count(m: int) -> int:
    """Smallest k for which the local design matrix [1, tangent, quadratic] can have full column rank."""
    return 1 + m + quadratic_term_count(m)


def modified_gram_schmidt(matrix: FloatArray) -> Optional[FloatArray]:
    """Orthonormalize columns left to right. Returns None when a column collapses (rank deficiency)."""
    basis = np.array(matrix, dtype=np.float64, copy=True)
    for j in range(basis.shape[1]):
        for i in range(j):
            basis[:, j] -= (basis[:, i] @ basis[:, j]) * basis[:, i]
        norm = np.linalg.norm(basis[:, j])
        if norm < DEGENERATE_COLUMN_NORM:
            return None
        basis[:, j] /= norm
    return basis


def local_design_matrix(tangent: FloatArray) -> FloatArray:
    """[1, t_1..t_m, t_a * t_b for a <= b] evaluated at every neighbor."""
    m = tangent.shape[1]
    quadratic = [tangent[:, a] * tangent[:, b] for a in range(m) for b in range(a, m)]
    return np.column_stack([np.ones(tangent.shape[0]), tangent, *quadratic])


def local_hessian_block(view: FloatArray, center: int, neighbors: IntArray, m: int) -> Optional[FloatArray]:
    """The k x k Hessian energy block of one neighborhood, or None if the neighborhood is degenerate."""
    # centered on the example itself, not on the neighborhood mean
    centered = view[neighbors] - view[center]
    left, _, _ = svd(centered, full_matrices=False)
    if left.shape[1] < m:
        return None
    orthonormal = modified_gram_schmidt(local_design_matrix(left[:, :m]))
    if orthonormal is None:
        return None
    quadratic_part = orthonormal[:, 1 + m :]
    return quadratic_part @ quadratic_part.T


def _accumulate(view: FloatArray, graph: NeighborGraph, m: int, examples: List[int]) -> Tuple[FloatArray, List[int]]:
    partial = np.zeros((graph.n, graph.n))
    dropped = []
    for example in examples:
        neighbors = graph.indices[example]
        block = local_hessian_block(view, example, neighbors, m)
        if block is None:
            dropped.append(example)
            continue
        partial[np.ix_(neighbors, neighbors)] += block
    return partial, dropped


def hessian_energy(
    view: FloatArray, graph: NeighborGraph, m: int, source: str = "", workers: int = 1
) -> ManifoldMatrix:
    """Accumulate per-neighborhood second-order penalties into the global n x n Hessian energy matrix.

    Each worker sums a contiguous range of examples into its own partial matrix; partials are added in range
    order so the result only depends on the worker count.
    """
    if m < 1:
        raise ValueError(f"intrinsic dimension must be >= 1, got {m}")
    if graph.k < minimum_neighbor_count(m):
        raise NeighborCountError(f"k={graph.k} is too small for m={m}, need k >= {minimum_neighbor_count(m)}")
    array = np.asarray(view, dtype=np.float64)
    if m > array.shape[1]:
        raise ValueError(f"intrinsic dimension {m} exceeds the view width {array.shape[1]}")

    ranges = [list(part) for part in divide(max(1, workers), range(graph.n))]
    if workers == 1:
        results = [_accumulate(array, graph, m, examples) for examples in ranges]
    else:
        results = Parallel(n_jobs=workers, prefer="threads")(
            delayed(_accumulate)(array, graph, m, examples) for examples in ranges
        )

    total = np.zeros((graph.n, graph.n))
    dropped: List[int] = []
    for partial, partial_dropped in results:
        total += partial
        dropped.extend(partial_dropped)
    if dropped:
        logger.warning(
            f"{source or 'view'}: dropped {len(dropped)} degenerate neighborhoods, first at example {dropped[0]}"
        )

    matrix = repair_psd((total + total.T) / 2.0, name=f"hessian {source}".strip())
    return ManifoldMatrix(matrix=matrix, kind=ManifoldKind.HESSIAN, source=source, intrinsic_dim=m)


def local_dimension(view: FloatArray, center: int, neighbors: IntArray, threshold: float) -> Optional[int]:
    """Smallest m whose leading singular values hold `threshold` of the neighborhood's squared spectral mass."""
    singular_values = svd(view[neighbors] - view[center], compute_uv=False)
    mass = singular_values**2
    total = mass.sum()
    if total <= 0:
        return None
    captured = np.cumsum(mass) / total
    return int(np.searchsorted(captured, threshold - 1e-12) + 1)


def estimate_intrinsic_dim(view: FloatArray, graph: NeighborGraph, threshold: float = DEFAULT_DIM_THRESHOLD) -> int:
    """Median over examples of the local dimension, rounded up; 1 when no neighborhood has any spread."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"dimension threshold must be in (0, 1), got {threshold}")
    array = np.asarray(view, dtype=np.float64)
    dims = [local_dimension(array, i, graph.indices[i], threshold) for i in range(graph.n)]
    known = [d for d in dims if d is not None]
    if not known:
        return 1
    return int(math.ceil(float(np.median(known))))
