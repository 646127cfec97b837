from dataclasses import dataclass
from typing import Optional

import numpy as np

from mhrlearn.dataset import FloatArray
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold.hessian_energy import DEFAULT_DIM_THRESHOLD, estimate_intrinsic_dim, hessian_energy
from mhrlearn.manifold.laplacian import laplacian
from mhrlearn.manifold.manifold_matrix import ManifoldKind, ManifoldMatrix
from mhrlearn.manifold.neighbors import NeighborGraph, default_neighbor_count, knn

logger = mhrlearn_logger.getChild(__file__)


@dataclass(frozen=True)
class ManifoldSettings:
    """How per-view regularizers are built. None for `k`, `m` or `bandwidth` means the data-driven default."""

    kind: ManifoldKind = ManifoldKind.HESSIAN
    k: Optional[int] = None
    m: Optional[int] = None
    dim_threshold: float = DEFAULT_DIM_THRESHOLD
    bandwidth: Optional[float] = None

    def __post_init__(self) -> None:
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.m is not None and self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 < self.dim_threshold < 1.0:
            raise ValueError(f"dim_threshold must be in (0, 1), got {self.dim_threshold}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")

    def neighbor_count(self, n: int) -> int:
        return self.k if self.k is not None else default_neighbor_count(n)


def neighbor_graph(view: FloatArray, settings: ManifoldSettings, workers: int = 1) -> NeighborGraph:
    return knn(view, settings.neighbor_count(view.shape[0]), workers=workers)


def build_manifold(
    view: FloatArray,
    settings: ManifoldSettings,
    kind: Optional[ManifoldKind] = None,
    source: str = "",
    graph: Optional[NeighborGraph] = None,
    workers: int = 1,
) -> ManifoldMatrix:
    """One view's regularizer of the requested kind (defaults to `settings.kind`)."""
    kind = settings.kind if kind is None else kind
    n = view.shape[0]
    if kind == ManifoldKind.NONE:
        return ManifoldMatrix(matrix=np.zeros((n, n)), kind=ManifoldKind.NONE, source=source)

    graph = graph if graph is not None else neighbor_graph(view, settings, workers)
    if kind == ManifoldKind.LAPLACIAN:
        return laplacian(view, graph, settings.bandwidth, source=source)

    m = settings.m if settings.m is not None else estimate_intrinsic_dim(view, graph, settings.dim_threshold)
    logger.info(f"Hessian energy for {source or 'view'}: n={n} k={graph.k} m={m}")
    return hessian_energy(view, graph, m, source=source, workers=workers)
