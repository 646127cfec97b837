from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from more_itertools import chunked
from scipy.linalg import eigh, eigvalsh
from scipy.spatial.distance import cdist, pdist

from mhrlearn.dataset import FloatArray, MultiviewDataset
from mhrlearn.kernels.kernel_definitions import (
    PSD_TOLERANCE,
    SYMMETRY_TOLERANCE,
    AsymmetricMatrixError,
    GramKernel,
    KernelFamily,
    KernelSpec,
    NotPositiveSemidefiniteError,
    SimplexWeights,
    ensure_same_size,
)
from mhrlearn.logger import mhrlearn_logger

logger = mhrlearn_logger.getChild(__file__)

# Rows per parallel block when building a Gram matrix
GRAM_BLOCK_ROWS = 256
# Eigenvalues this close to zero, relative to the spectrum, are float noise and left untouched by repair_psd
NOISE_FLOOR = 1e-12


def median_bandwidth(view: FloatArray) -> float:
    """Median of the nonzero pairwise Euclidean distances; 1.0 when every point coincides."""
    distances = pdist(np.asarray(view, dtype=np.float64))
    distances = distances[distances > 0]
    if distances.size == 0:
        return 1.0
    return float(np.median(distances))


def evaluate_kernel(left: FloatArray, right: FloatArray, spec: KernelSpec) -> FloatArray:
    """Kernel values between every row of `left` and every row of `right` (no symmetrization)."""
    if spec.family == KernelFamily.GAUSSIAN_RBF:
        if spec.bandwidth is None:
            raise ValueError("gaussian kernel evaluated before its bandwidth was resolved")
        values = np.exp(-cdist(left, right, "sqeuclidean") / (2.0 * spec.bandwidth**2))
    elif spec.family == KernelFamily.POLYNOMIAL:
        values = (left @ right.T + spec.offset) ** spec.degree
    else:
        values = left @ right.T
    if spec.scale != 1.0:
        values = values * spec.scale
    return values


def _check_finite(view: FloatArray) -> FloatArray:
    array = np.asarray(view, dtype=np.float64)
    if array.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError("non-finite feature values")
    return array


def gram(view: FloatArray, spec: KernelSpec, source: str = "", workers: int = 1) -> GramKernel:
    """Build the symmetrized n x n Gram matrix of one view.

    Rows are computed in contiguous blocks, optionally on a thread pool, and stacked in block order.
    """
    array = _check_finite(view)
    resolved = spec.resolve(array)

    blocks = [list(block) for block in chunked(range(array.shape[0]), GRAM_BLOCK_ROWS)]
    if workers == 1 or len(blocks) == 1:
        rows = [evaluate_kernel(array[block], array, resolved) for block in blocks]
    else:
        rows = Parallel(n_jobs=workers, prefer="threads")(
            delayed(evaluate_kernel)(array[block], array, resolved) for block in blocks
        )

    matrix = np.vstack(rows)
    matrix = (matrix + matrix.T) / 2.0
    logger.debug(f"Built {resolved.family.name.lower()} gram for {source or 'view'}: n={array.shape[0]}")
    return GramKernel(matrix=matrix, source=source)


def cross_gram(test_view: FloatArray, train_view: FloatArray, spec: KernelSpec) -> FloatArray:
    """Rectangular test x train kernel; `spec` must already be resolved against the training view."""
    if not spec.is_resolved:
        raise ValueError("cross_gram needs a kernel spec resolved against the training view")
    test_array = _check_finite(test_view)
    train_array = _check_finite(train_view)
    if test_array.shape[1] != train_array.shape[1]:
        raise ValueError(f"test view has width {test_array.shape[1]}, training view has {train_array.shape[1]}")
    return evaluate_kernel(test_array, train_array, spec)


def _check_symmetric(matrix: FloatArray) -> FloatArray:
    array = np.asarray(matrix, dtype=np.float64)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise AsymmetricMatrixError(f"expected a square matrix, got shape {array.shape}")
    scale = max(1.0, float(np.abs(array).max())) if array.size else 1.0
    asymmetry = float(np.abs(array - array.T).max()) if array.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        raise AsymmetricMatrixError(f"matrix asymmetry {asymmetry:.3e} exceeds tolerance")
    return array


def check_psd(matrix: FloatArray, tol: float = PSD_TOLERANCE) -> Tuple[bool, float]:
    """Returns (is_psd, smallest eigenvalue), with is_psd relative to max(1, |largest eigenvalue|)."""
    array = _check_symmetric(matrix)
    eigenvalues = eigvalsh((array + array.T) / 2.0)
    min_eig = float(eigenvalues[0])
    max_eig = float(eigenvalues[-1])
    return min_eig >= -tol * max(1.0, abs(max_eig)), min_eig


def repair_psd(matrix: FloatArray, tol: float = PSD_TOLERANCE, name: str = "matrix") -> FloatArray:
    """Clip small negative eigenvalues to zero; refuse matrices that are genuinely indefinite.

    Matrices whose spectrum is already nonnegative up to float noise are returned symmetrized but otherwise
    untouched, which keeps exact zeros in place.
    """
    array = _check_symmetric(matrix)
    symmetric = (array + array.T) / 2.0
    eigenvalues, eigenvectors = eigh(symmetric)
    reference = max(1.0, abs(float(eigenvalues[-1])))

    if eigenvalues[0] >= -NOISE_FLOOR * reference:
        return symmetric
    if eigenvalues[0] < -tol * reference:
        raise NotPositiveSemidefiniteError(f"{name}: smallest eigenvalue {eigenvalues[0]:.3e} is below -tol")

    logger.warning(f"{name}: clipping negative eigenvalues down to {eigenvalues[0]:.3e}")
    clipped = np.clip(eigenvalues, 0.0, None)
    repaired = (eigenvectors * clipped) @ eigenvectors.T
    return (repaired + repaired.T) / 2.0


def weighted_sum(matrices: Sequence[FloatArray], weights: SimplexWeights) -> FloatArray:
    n, _ = ensure_same_size(matrices, weights)
    total = np.zeros((n, n))
    for weight, matrix in zip(weights, matrices):
        if weight != 0.0:
            total += weight * matrix
    return total


def combine_kernels(kernels: Sequence[GramKernel], theta: SimplexWeights) -> GramKernel:
    """The multiview kernel sum_k theta_k K_k."""
    if not isinstance(theta, SimplexWeights):
        theta = SimplexWeights(np.asarray(theta))
    return GramKernel(matrix=weighted_sum([k.matrix for k in kernels], theta), source=theta)


def average_kernel(kernels: Sequence[GramKernel]) -> GramKernel:
    return combine_kernels(kernels, SimplexWeights.uniform(len(kernels)))


def concat_views(dataset: MultiviewDataset, name: Optional[str] = None) -> MultiviewDataset:
    """Single-view dataset whose one view is every view's features side by side."""
    if dataset.n_views == 1:
        return dataset
    columns: List[str] = []
    for view_name, view_columns in zip(dataset.view_names, dataset.view_columns):
        columns.extend(f"{view_name}.{column}" for column in view_columns)
    return dataset.with_views([np.hstack(dataset.views)], [name or "concat"], [columns])
