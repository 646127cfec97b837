import hashlib
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mhrlearn.dataset import FloatArray, IntArray, MultiviewDataset
from mhrlearn.kernels import GramKernel, KernelSpec, MatrixKind, gram, read_matrix_cache, write_matrix_cache
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold import ManifoldKind, ManifoldMatrix, ManifoldSettings, build_manifold

logger = mhrlearn_logger.getChild(__file__)

CONCAT_VIEW_NAME = "concat"


def relative_order(base: IntArray, derived: IntArray) -> IntArray:
    """Positions in `base` of every entry of `derived`, both being permutations of the same original ids."""
    sorter = np.argsort(base, kind="stable")
    positions = sorter[np.searchsorted(base, derived, sorter=sorter)]
    if not np.array_equal(base[positions], derived):
        raise ValueError("derived ordering refers to examples missing from the base ordering")
    return positions


@dataclass
class ViewBank:
    """Per-view kernels and regularizers of one training set, built on first use and shared afterwards.

    Every method that trains on the same examples (any mask, any method tag) reads its matrices from here;
    `permuted()` re-indexes the cached matrices for a reordering of the same examples.
    """

    views: Tuple[FloatArray, ...]
    view_names: Tuple[str, ...]
    kernel_specs: Tuple[KernelSpec, ...]
    settings: ManifoldSettings = ManifoldSettings()
    concat_spec: KernelSpec = KernelSpec()
    workers: int = 1
    cache_dir: Optional[Path] = None
    cache_key: str = ""
    _kernels: Dict[int, GramKernel] = field(default_factory=dict, repr=False)
    _manifolds: Dict[Tuple[int, ManifoldKind], ManifoldMatrix] = field(default_factory=dict, repr=False)
    _concat: Optional["ViewBank"] = field(default=None, repr=False)
    _lock: Any = field(default_factory=threading.RLock, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.kernel_specs) != len(self.views):
            raise ValueError(f"{len(self.views)} views but {len(self.kernel_specs)} kernel specs")
        self.kernel_specs = tuple(spec.resolve(view) for spec, view in zip(self.kernel_specs, self.views))

    @classmethod
    def from_dataset(
        cls,
        dataset: MultiviewDataset,
        kernel_specs: Sequence[KernelSpec],
        settings: ManifoldSettings = ManifoldSettings(),
        concat_spec: KernelSpec = KernelSpec(),
        workers: int = 1,
        cache_dir: Optional[Path] = None,
    ) -> "ViewBank":
        return cls(
            views=dataset.views,
            view_names=dataset.view_names,
            kernel_specs=tuple(kernel_specs),
            settings=settings,
            concat_spec=concat_spec,
            workers=workers,
            cache_dir=cache_dir,
            cache_key=dataset.content_hash() if cache_dir else "",
        )

    @property
    def n(self) -> int:
        return int(self.views[0].shape[0])

    def index(self, view_name: str) -> int:
        if view_name not in self.view_names:
            raise KeyError(f"unknown view {view_name}, expected one of {self.view_names}")
        return self.view_names.index(view_name)

    def _cache_path(self, *parts: object) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        digest = hashlib.sha256("|".join([self.cache_key, *map(repr, parts)]).encode()).hexdigest()
        return self.cache_dir / f"{digest[:24]}.mhrc"

    def _through_cache(self, kind: MatrixKind, build: Callable[[], FloatArray], *parts: object) -> FloatArray:
        path = self._cache_path(kind, *parts)
        if path is not None and path.exists():
            logger.debug(f"Cache hit {path.name}")
            return read_matrix_cache(path, kind)
        matrix = build()
        if path is not None:
            write_matrix_cache(path, matrix, kind)
        return matrix

    def kernel(self, index: int) -> GramKernel:
        with self._lock:
            if index not in self._kernels:
                name, view, spec = self.view_names[index], self.views[index], self.kernel_specs[index]
                matrix = self._through_cache(
                    MatrixKind.KERNEL, lambda: gram(view, spec, name, self.workers).matrix.copy(), name, spec
                )
                self._kernels[index] = GramKernel(matrix=matrix, source=name)
            return self._kernels[index]

    def kernels(self) -> List[GramKernel]:
        return [self.kernel(i) for i in range(len(self.views))]

    def manifold(self, index: int, kind: ManifoldKind) -> ManifoldMatrix:
        with self._lock:
            key = (index, kind)
            if key not in self._manifolds:
                name, view = self.view_names[index], self.views[index]
                if kind == ManifoldKind.NONE:
                    self._manifolds[key] = ManifoldMatrix.zeros(self.n, name)
                else:
                    built: Dict[str, ManifoldMatrix] = {}

                    def _build() -> FloatArray:
                        built["matrix"] = build_manifold(view, self.settings, kind, name, workers=self.workers)
                        return built["matrix"].matrix.copy()

                    matrix_kind = MatrixKind.HESSIAN if kind == ManifoldKind.HESSIAN else MatrixKind.LAPLACIAN
                    matrix = self._through_cache(matrix_kind, _build, name, self.settings)
                    intrinsic_dim = built["matrix"].intrinsic_dim if built else self.settings.m
                    self._manifolds[key] = ManifoldMatrix(
                        matrix=matrix, kind=kind, source=name, intrinsic_dim=intrinsic_dim
                    )
            return self._manifolds[key]

    def manifolds(self, kind: ManifoldKind) -> List[ManifoldMatrix]:
        return [self.manifold(i, kind) for i in range(len(self.views))]

    def concat(self) -> "ViewBank":
        """Bank over the single view formed by placing every view's features side by side."""
        with self._lock:
            if len(self.views) == 1:
                return self
            if self._concat is None:
                self._concat = ViewBank(
                    views=(np.hstack(self.views),),
                    view_names=(CONCAT_VIEW_NAME,),
                    kernel_specs=(self.concat_spec,),
                    settings=self.settings,
                    concat_spec=self.concat_spec,
                    workers=self.workers,
                    cache_dir=self.cache_dir,
                    cache_key=self.cache_key,
                )
            return self._concat

    def select(self, view_name: str) -> "ViewBank":
        """Single-view bank sharing whatever this bank already built for that view."""
        index = self.index(view_name)
        with self._lock:
            return ViewBank(
                views=(self.views[index],),
                view_names=(view_name,),
                kernel_specs=(self.kernel_specs[index],),
                settings=self.settings,
                concat_spec=self.concat_spec,
                workers=self.workers,
                cache_dir=self.cache_dir,
                cache_key=self.cache_key,
                _kernels={0: self._kernels[index]} if index in self._kernels else {},
                _manifolds={(0, kind): m for (i, kind), m in self._manifolds.items() if i == index},
            )

    def permuted(self, order: IntArray) -> "ViewBank":
        """The same bank for examples reordered so that new example i is old example order[i]."""
        grid = np.ix_(order, order)
        with self._lock:
            permuted = replace(
                self,
                views=tuple(np.ascontiguousarray(v[order]) for v in self.views),
                cache_dir=None,
                _kernels={i: GramKernel(matrix=k.matrix[grid], source=k.source) for i, k in self._kernels.items()},
                _manifolds={
                    key: replace(m, matrix=np.ascontiguousarray(m.matrix[grid])) for key, m in self._manifolds.items()
                },
                _concat=None if self._concat is None else self._concat.permuted(order),
                _lock=threading.RLock(),
            )
        return permuted

    def prepare(self, kinds: Sequence[ManifoldKind], concat: bool = False) -> None:
        """Build everything up front, typically before parallel workers start reading."""
        self.kernels()
        for kind in kinds:
            self.manifolds(kind)
        if concat:
            bank = self.concat()
            bank.kernels()
            for kind in kinds:
                bank.manifolds(kind)
