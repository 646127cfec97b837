from typing import Optional

import numpy as np

from mhrlearn.dataset import FloatArray
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold.manifold_matrix import ManifoldKind, ManifoldMatrix
from mhrlearn.manifold.neighbors import NeighborGraph

logger = mhrlearn_logger.getChild(__file__)


def median_neighbor_distance(graph: NeighborGraph) -> float:
    distances = graph.distances[graph.distances > 0]
    return float(np.median(distances)) if distances.size else 1.0


def laplacian(
    view: FloatArray, graph: NeighborGraph, bandwidth: Optional[float] = None, source: str = ""
) -> ManifoldMatrix:
    """Unnormalized graph Laplacian D - W with heat-kernel weights on the symmetrized kNN graph.

    An edge i~j exists when either is among the other's neighbors. `bandwidth` defaults to the median kNN distance.
    """
    if bandwidth is None:
        bandwidth = median_neighbor_distance(graph)
    if not bandwidth > 0:
        raise ValueError(f"laplacian bandwidth must be > 0, got {bandwidth}")
    if graph.n != view.shape[0]:
        raise ValueError(f"graph has {graph.n} examples, view has {view.shape[0]}")

    n = graph.n
    rows = np.repeat(np.arange(n), graph.k)
    cols = graph.indices.ravel()
    weights = np.exp(-(graph.distances.ravel() ** 2) / (2.0 * bandwidth**2))

    adjacency = np.zeros((n, n))
    adjacency[rows, cols] = weights
    adjacency[cols, rows] = weights

    matrix = np.diag(adjacency.sum(axis=1)) - adjacency
    logger.debug(f"Laplacian for {source or 'view'}: bandwidth={bandwidth:.4g} edges={int((adjacency > 0).sum()) // 2}")
    return ManifoldMatrix(matrix=matrix, kind=ManifoldKind.LAPLACIAN, source=source)
