from .gram import (
    average_kernel,
    check_psd,
    combine_kernels,
    concat_views,
    cross_gram,
    evaluate_kernel,
    gram,
    median_bandwidth,
    repair_psd,
    weighted_sum,
)
from .kernel_definitions import (
    PSD_TOLERANCE,
    SIMPLEX_TOLERANCE,
    AsymmetricMatrixError,
    DimensionMismatchError,
    GramKernel,
    KernelFamily,
    KernelSpec,
    KernelSpecError,
    NotPositiveSemidefiniteError,
    SimplexViolationError,
    SimplexWeights,
)
from .matrix_cache import (
    MatrixCacheFormatError,
    MatrixCacheHeader,
    MatrixDtype,
    MatrixKind,
    decode_matrix_cache,
    encode_matrix_cache,
    read_matrix_cache,
    write_matrix_cache,
)

__all__ = [
    "average_kernel",
    "check_psd",
    "combine_kernels",
    "concat_views",
    "cross_gram",
    "evaluate_kernel",
    "gram",
    "median_bandwidth",
    "repair_psd",
    "weighted_sum",
    "PSD_TOLERANCE",
    "SIMPLEX_TOLERANCE",
    "AsymmetricMatrixError",
    "DimensionMismatchError",
    "GramKernel",
    "KernelFamily",
    "KernelSpec",
    "KernelSpecError",
    "NotPositiveSemidefiniteError",
    "SimplexViolationError",
    "SimplexWeights",
    "MatrixCacheFormatError",
    "MatrixCacheHeader",
    "MatrixDtype",
    "MatrixKind",
    "decode_matrix_cache",
    "encode_matrix_cache",
    "read_matrix_cache",
    "write_matrix_cache",
]
