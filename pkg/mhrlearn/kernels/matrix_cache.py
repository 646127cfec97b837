"""Binary cache files for dense n x n kernel and regularizer matrices.

Layout (little-endian): a 16-byte MatrixCacheHeader followed by the matrix in row-major order.
"""
from ctypes import LittleEndianStructure, c_char, c_uint8, c_uint64, sizeof
from enum import IntEnum
from pathlib import Path
from typing import Tuple

import numpy as np

from mhrlearn.dataset import FloatArray
from mhrlearn.logger import mhrlearn_logger

logger = mhrlearn_logger.getChild(__file__)

MATRIX_CACHE_MAGIC = b"MHRC"


class MatrixCacheFormatError(Exception):
    """Raised when a cache file's header or payload is malformed."""


class MatrixKind(IntEnum):
    KERNEL = 0
    LAPLACIAN = 1
    HESSIAN = 2


class MatrixDtype(IntEnum):
    FLOAT64 = 1
    FLOAT32 = 2

    @property
    def numpy_dtype(self) -> str:
        return {MatrixDtype.FLOAT64: "<f8", MatrixDtype.FLOAT32: "<f4"}[self]


class MatrixCacheHeader(LittleEndianStructure):
    _pack_ = 1
    _fields_ = [
        ("magic", c_char * 4),
        ("n", c_uint64),
        ("dtype", c_uint8),
        ("kind", c_uint8),
        ("reserved", c_uint8 * 2),
    ]


assert sizeof(MatrixCacheHeader) == 16


def encode_matrix_cache(matrix: FloatArray, kind: MatrixKind, dtype: MatrixDtype = MatrixDtype.FLOAT64) -> bytes:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise MatrixCacheFormatError(f"only square matrices are cached, got shape {matrix.shape}")
    header = MatrixCacheHeader()
    header.magic = MATRIX_CACHE_MAGIC
    header.n = matrix.shape[0]
    header.dtype = int(dtype)
    header.kind = int(kind)
    payload = np.ascontiguousarray(matrix, dtype=dtype.numpy_dtype).tobytes()
    return bytes(header) + payload


def decode_matrix_cache(data: bytes) -> Tuple[MatrixCacheHeader, FloatArray]:
    header_size = sizeof(MatrixCacheHeader)
    if len(data) < header_size:
        raise MatrixCacheFormatError(f"truncated header: {len(data)} bytes")
    header = MatrixCacheHeader.from_buffer(bytearray(data[:header_size]))
    if header.magic != MATRIX_CACHE_MAGIC:
        raise MatrixCacheFormatError(f"bad magic {header.magic!r}")
    try:
        dtype = MatrixDtype(header.dtype)
        MatrixKind(header.kind)
    except ValueError as exc:
        raise MatrixCacheFormatError(str(exc))

    n = int(header.n)
    expected = header_size + n * n * np.dtype(dtype.numpy_dtype).itemsize
    if len(data) != expected:
        raise MatrixCacheFormatError(f"payload size mismatch: expected {expected} bytes, got {len(data)}")
    matrix = np.frombuffer(data, dtype=dtype.numpy_dtype, offset=header_size).reshape(n, n).astype(np.float64)
    return header, matrix


def write_matrix_cache(path: Path, matrix: FloatArray, kind: MatrixKind) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_matrix_cache(matrix, kind))
    logger.debug(f"Wrote {kind.name.lower()} cache {path}")


def read_matrix_cache(path: Path, expected_kind: MatrixKind) -> FloatArray:
    header, matrix = decode_matrix_cache(path.read_bytes())
    if header.kind != expected_kind:
        raise MatrixCacheFormatError(
            f"{path.name}: holds a {MatrixKind(header.kind).name.lower()}, expected {expected_kind.name.lower()}"
        )
    return matrix
