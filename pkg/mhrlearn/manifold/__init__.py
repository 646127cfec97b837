from .builder import ManifoldSettings, build_manifold, neighbor_graph
from .hessian_energy import (
    DEFAULT_DIM_THRESHOLD,
    estimate_intrinsic_dim,
    hessian_energy,
    local_design_matrix,
    local_hessian_block,
    minimum_neighbor_count,
    modified_gram_schmidt,
)
from .laplacian import laplacian, median_neighbor_distance
from .manifold_matrix import ManifoldKind, ManifoldMatrix, combine_manifolds
from .neighbors import REFERENCE_NEIGHBOR_COUNT, NeighborCountError, NeighborGraph, default_neighbor_count, knn

__all__ = [
    "ManifoldSettings",
    "build_manifold",
    "neighbor_graph",
    "DEFAULT_DIM_THRESHOLD",
    "estimate_intrinsic_dim",
    "hessian_energy",
    "local_design_matrix",
    "local_hessian_block",
    "minimum_neighbor_count",
    "modified_gram_schmidt",
    "laplacian",
    "median_neighbor_distance",
    "ManifoldKind",
    "ManifoldMatrix",
    "combine_manifolds",
    "REFERENCE_NEIGHBOR_COUNT",
    "NeighborCountError",
    "NeighborGraph",
    "default_neighbor_count",
    "knn",
]
