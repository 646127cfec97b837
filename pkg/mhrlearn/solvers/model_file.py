"""Binary model files.

Layout (little-endian):
    ModelFileHeader
    ViewRecord * n_views
    alpha            float64 * n
    theta            float64 * n_views
    beta             float64 * n_views
    TraceRecord * trace_length
    training views   float64 * (n * width), per view, row-major
    scaler           float64 * width means then float64 * width scales, per view (if MODEL_FLAG_SCALER)
"""
import hashlib
from ctypes import LittleEndianStructure, c_char, c_double, c_uint8, c_uint16, c_uint32, c_uint64, sizeof
from enum import IntFlag
from pathlib import Path
from typing import List, Tuple, Type, TypeVar

import numpy as np

from mhrlearn.dataset import FloatArray, ViewScaler
from mhrlearn.kernels import KernelFamily, KernelSpec, SimplexWeights
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold import ManifoldKind
from mhrlearn.solvers.alternating import TraceEntry, TraceStep, TrainedModel
from mhrlearn.solvers.objective import LossKind, ObjectiveConfig

logger = mhrlearn_logger.getChild(__file__)

MODEL_FILE_MAGIC = b"MHRM"
MODEL_FILE_VERSION = 1
NAME_LENGTH = 32

_StructureT = TypeVar("_StructureT", bound=LittleEndianStructure)


class ModelFileFormatError(Exception):
    """Raised when a model file is truncated, has a bad header, or its embedded views fail the fingerprint."""


class ModelFlags(IntFlag):
    CONCATENATED = 1 << 0
    SCALER = 1 << 1
    LEARN_THETA = 1 << 2
    LEARN_BETA = 1 << 3


class ModelFileHeader(LittleEndianStructure):
    _pack_ = 1
    _fields_ = [
        ("magic", c_char * 4),
        ("version", c_uint16),
        ("loss", c_uint8),
        ("flags", c_uint8),
        ("n", c_uint64),
        ("n_views", c_uint32),
        ("trace_length", c_uint32),
        ("n_labeled", c_uint64),
        ("manifold_kind", c_uint8),
        ("reserved", c_uint8 * 7),
        ("gamma_a", c_double),
        ("gamma_i", c_double),
        ("gamma_theta", c_double),
        ("gamma_beta", c_double),
        ("mu", c_double),
        ("tol_inner", c_double),
        ("tol_outer", c_double),
        ("max_inner_iters", c_uint32),
        ("max_outer_rounds", c_uint32),
        ("outer_rounds", c_uint32),
        ("reserved2", c_uint32),
        ("class_name", c_char * NAME_LENGTH),
        ("fingerprint", c_uint8 * 32),
    ]


class ViewRecord(LittleEndianStructure):
    _pack_ = 1
    _fields_ = [
        ("name", c_char * NAME_LENGTH),
        ("family", c_uint8),
        ("trace_normalize", c_uint8),
        ("reserved", c_uint8 * 2),
        ("degree", c_uint32),
        ("width", c_uint64),
        ("bandwidth", c_double),
        ("offset", c_double),
        ("scale", c_double),
    ]


class TraceRecord(LittleEndianStructure):
    _pack_ = 1
    _fields_ = [
        ("round", c_uint32),
        ("step", c_uint32),
        ("objective", c_double),
    ]


def _encode_name(name: str) -> bytes:
    encoded = name.encode()
    if len(encoded) > NAME_LENGTH or b"\x00" in encoded:
        raise ModelFileFormatError(f"name {name!r} does not fit a {NAME_LENGTH}-byte field")
    return encoded


def _float_bytes(values: FloatArray) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def encode_model(model: TrainedModel) -> bytes:
    """Serialize a model; the bytes depend only on the model's contents."""
    flags = ModelFlags(0)
    if model.concatenated:
        flags |= ModelFlags.CONCATENATED
    if model.scaler is not None:
        flags |= ModelFlags.SCALER
    if model.learn_theta:
        flags |= ModelFlags.LEARN_THETA
    if model.learn_beta:
        flags |= ModelFlags.LEARN_BETA

    config = model.config
    header = ModelFileHeader()
    header.magic = MODEL_FILE_MAGIC
    header.version = MODEL_FILE_VERSION
    header.loss = int(config.loss)
    header.flags = int(flags)
    header.n = model.n
    header.n_views = len(model.view_names)
    header.trace_length = len(model.objective_trace)
    header.n_labeled = model.n_labeled
    header.manifold_kind = int(model.manifold_kind)
    header.gamma_a = config.gamma_a
    header.gamma_i = config.gamma_i
    header.gamma_theta = config.gamma_theta
    header.gamma_beta = config.gamma_beta
    header.mu = config.mu
    header.tol_inner = config.tol_inner
    header.tol_outer = config.tol_outer
    header.max_inner_iters = config.max_inner_iters
    header.max_outer_rounds = config.max_outer_rounds
    header.outer_rounds = model.outer_rounds
    header.class_name = _encode_name(model.class_name)
    header.fingerprint[:] = list(model.fingerprint)

    chunks = [bytes(header)]
    for name, spec, view in zip(model.view_names, model.kernel_specs, model.train_views):
        record = ViewRecord()
        record.name = _encode_name(name)
        record.family = int(spec.family)
        record.trace_normalize = int(spec.trace_normalize)
        record.degree = spec.degree
        record.width = view.shape[1]
        record.bandwidth = spec.bandwidth if spec.bandwidth is not None else 0.0
        record.offset = spec.offset
        record.scale = spec.scale
        chunks.append(bytes(record))

    chunks.append(_float_bytes(model.alpha))
    chunks.append(_float_bytes(model.theta.weights))
    chunks.append(_float_bytes(model.beta.weights))
    for entry in model.objective_trace:
        trace_record = TraceRecord()
        trace_record.round = entry.round
        trace_record.step = int(entry.step)
        trace_record.objective = entry.objective
        chunks.append(bytes(trace_record))
    chunks.extend(_float_bytes(view) for view in model.train_views)
    if model.scaler is not None:
        for means, scales in zip(model.scaler.means, model.scaler.scales):
            chunks.append(_float_bytes(means))
            chunks.append(_float_bytes(scales))
    return b"".join(chunks)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def read_struct(self, struct_type: Type[_StructureT]) -> _StructureT:
        size = sizeof(struct_type)
        if self.offset + size > len(self.data):
            raise ModelFileFormatError(f"truncated model file while reading {struct_type.__name__}")
        struct = struct_type.from_buffer(bytearray(self.data[self.offset : self.offset + size]))
        self.offset += size
        return struct

    def read_floats(self, count: int) -> FloatArray:
        size = 8 * count
        if self.offset + size > len(self.data):
            raise ModelFileFormatError("truncated model file while reading a float array")
        values = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.offset).astype(np.float64)
        self.offset += size
        return values


def decode_model(data: bytes) -> TrainedModel:
    reader = _Reader(data)
    header = reader.read_struct(ModelFileHeader)
    if header.magic != MODEL_FILE_MAGIC:
        raise ModelFileFormatError(f"bad magic {header.magic!r}")
    if header.version != MODEL_FILE_VERSION:
        raise ModelFileFormatError(f"unsupported model file version {header.version}")

    try:
        config = ObjectiveConfig(
            gamma_a=header.gamma_a,
            gamma_i=header.gamma_i,
            gamma_theta=header.gamma_theta,
            gamma_beta=header.gamma_beta,
            loss=LossKind(header.loss),
            mu=header.mu,
            max_inner_iters=header.max_inner_iters,
            max_outer_rounds=header.max_outer_rounds,
            tol_inner=header.tol_inner,
            tol_outer=header.tol_outer,
        )
        manifold_kind = ManifoldKind(header.manifold_kind)
    except ValueError as exc:
        raise ModelFileFormatError(f"invalid header: {exc}")

    n, n_views = int(header.n), int(header.n_views)
    records = [reader.read_struct(ViewRecord) for _ in range(n_views)]
    specs: List[KernelSpec] = []
    for record in records:
        family = KernelFamily(record.family)
        specs.append(
            KernelSpec(
                family=family,
                bandwidth=record.bandwidth if family == KernelFamily.GAUSSIAN_RBF else None,
                degree=record.degree,
                offset=record.offset,
                trace_normalize=bool(record.trace_normalize),
                scale=record.scale,
            )
        )

    alpha = reader.read_floats(n)
    theta = SimplexWeights(reader.read_floats(n_views))
    beta = SimplexWeights(reader.read_floats(n_views))
    trace = []
    for _ in range(header.trace_length):
        trace_record = reader.read_struct(TraceRecord)
        trace.append(TraceEntry(int(trace_record.round), TraceStep(trace_record.step), float(trace_record.objective)))

    views = tuple(reader.read_floats(n * int(r.width)).reshape(n, int(r.width)) for r in records)
    flags = ModelFlags(header.flags)
    scaler = None
    if flags & ModelFlags.SCALER:
        stats: Tuple[List[FloatArray], List[FloatArray]] = ([], [])
        for record in records:
            stats[0].append(reader.read_floats(int(record.width)))
            stats[1].append(reader.read_floats(int(record.width)))
        scaler = ViewScaler(means=tuple(stats[0]), scales=tuple(stats[1]))
    if reader.offset != len(data):
        raise ModelFileFormatError(f"{len(data) - reader.offset} trailing bytes after the model")

    model = TrainedModel(
        alpha=alpha,
        theta=theta,
        beta=beta,
        objective_trace=tuple(trace),
        config=config,
        kernel_specs=tuple(specs),
        view_names=tuple(r.name.decode() for r in records),
        train_views=views,
        manifold_kind=manifold_kind,
        n_labeled=int(header.n_labeled),
        class_name=header.class_name.decode(),
        learn_theta=bool(flags & ModelFlags.LEARN_THETA),
        learn_beta=bool(flags & ModelFlags.LEARN_BETA),
        concatenated=bool(flags & ModelFlags.CONCATENATED),
        scaler=scaler,
    )
    if model.fingerprint != bytes(header.fingerprint):
        raise ModelFileFormatError("embedded training views do not match the stored fingerprint")
    return model


def save_model(model: TrainedModel, path: Path) -> str:
    """Write the model and return the SHA-256 of the file's bytes."""
    data = encode_model(model)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    logger.debug(f"Wrote model {path} ({len(data)} bytes)")
    return hashlib.sha256(data).hexdigest()


def load_model(path: Path) -> TrainedModel:
    if not path.exists():
        raise FileNotFoundError(f"not found: {path}")
    return decode_model(path.read_bytes())
