from dataclasses import dataclass
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed
from more_itertools import chunked
from scipy.spatial.distance import cdist

from mhrlearn.dataset import FloatArray, IntArray
from mhrlearn.logger import mhrlearn_logger

logger = mhrlearn_logger.getChild(__file__)

# Neighborhood size used throughout the reference experiments
REFERENCE_NEIGHBOR_COUNT = 100
KNN_BLOCK_ROWS = 512


class NeighborCountError(Exception):
    """Raised when a neighbor count is out of range for the data or too small for the requested estimate."""


@dataclass(frozen=True)
class NeighborGraph:
    """k nearest neighbors of every example, self excluded, ordered by distance then index."""

    k: int
    indices: IntArray
    distances: FloatArray

    @property
    def n(self) -> int:
        return int(self.indices.shape[0])


def default_neighbor_count(n: int) -> int:
    return min(REFERENCE_NEIGHBOR_COUNT, n - 1)


def _nearest_block(view: FloatArray, rows: range, k: int) -> Tuple[IntArray, FloatArray]:
    distances = cdist(view[rows.start : rows.stop], view, "euclidean")
    distances[np.arange(len(rows)), np.arange(rows.start, rows.stop)] = np.inf
    # stable sort keeps the lower index first among equal distances
    order = np.argsort(distances, axis=1, kind="stable")[:, :k]
    return order, np.take_along_axis(distances, order, axis=1)


def knn(view: FloatArray, k: int, workers: int = 1) -> NeighborGraph:
    """Exact Euclidean k-nearest-neighbor lists."""
    array = np.asarray(view, dtype=np.float64)
    n = array.shape[0]
    if not 1 <= k <= n - 1:
        raise NeighborCountError(f"k must be in [1, {n - 1}] for n={n}, got {k}")

    blocks = [range(block[0], block[-1] + 1) for block in chunked(range(n), KNN_BLOCK_ROWS)]
    if workers == 1 or len(blocks) == 1:
        results = [_nearest_block(array, rows, k) for rows in blocks]
    else:
        results = Parallel(n_jobs=workers, prefer="threads")(
            delayed(_nearest_block)(array, rows, k) for rows in blocks
        )

    indices = np.vstack([order for order, _ in results]).astype(np.int64)
    distances = np.vstack([dist for _, dist in results])
    return NeighborGraph(k=k, indices=indices, distances=distances)
