import csv
import hashlib
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from mhrlearn.logger import mhrlearn_logger

logger = mhrlearn_logger.getChild(__file__)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]
LabelArray = npt.NDArray[np.int8]

LABELS_FILENAME = "labels.csv"
LATENT_FILENAME = "latent.csv"
VIEW_FILE_PREFIX = "view_"


class DatasetFormatError(Exception):
    """Raised when on-disk or in-memory dataset content violates the dataset invariants."""


class LabelMaskError(Exception):
    """Raised when a label mask cannot be built or does not fit its dataset."""


class Label(IntEnum):
    NEGATIVE = -1
    UNLABELED = 0
    POSITIVE = 1


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def round_half_up(value: float) -> int:
    """Round to the nearest integer with halves rounded away from zero (Python's round() would go to even)."""
    return int(np.floor(value + 0.5))


@dataclass(frozen=True)
class MultiviewDataset:
    """n examples seen through several views, with labeled examples first.

    `permutation[i]` is the index example i had when the dataset was loaded or generated, so outputs can be
    mapped back to the caller's order.
    """

    views: Tuple[FloatArray, ...]
    view_names: Tuple[str, ...]
    label_matrix: LabelArray
    class_names: Tuple[str, ...]
    permutation: IntArray
    view_columns: Tuple[Tuple[str, ...], ...] = ()
    latent: Optional[FloatArray] = None

    def __post_init__(self) -> None:
        if not self.views:
            raise DatasetFormatError("a dataset needs at least one view")
        if len(self.view_names) != len(self.views):
            raise DatasetFormatError(f"{len(self.views)} views but {len(self.view_names)} view names")
        if len(set(self.view_names)) != len(self.view_names):
            raise DatasetFormatError(f"duplicate view names: {self.view_names}")

        n = self.label_matrix.shape[0]
        for name, view in zip(self.view_names, self.views):
            if view.ndim != 2 or view.shape[1] == 0:
                raise DatasetFormatError(f"view {name}: empty view")
            if view.shape[0] != n:
                raise DatasetFormatError(f"row count mismatch: view {name} has {view.shape[0]} rows, labels have {n}")
            if not np.all(np.isfinite(view)):
                raise DatasetFormatError(f"view {name}: non-finite feature values")

        if self.label_matrix.ndim != 2 or self.label_matrix.shape[1] != len(self.class_names):
            raise DatasetFormatError("label matrix must be n x (number of classes)")
        if not np.isin(self.label_matrix, [Label.NEGATIVE, Label.UNLABELED, Label.POSITIVE]).all():
            raise DatasetFormatError("labels must take values in {+1, -1, 0}")

        unlabeled_cells = self.label_matrix == Label.UNLABELED
        partially_labeled = unlabeled_cells.any(axis=1) & ~unlabeled_cells.all(axis=1)
        if partially_labeled.any():
            raise DatasetFormatError(
                f"example {int(np.flatnonzero(partially_labeled)[0])} is labeled for some classes but not others"
            )

        labeled = ~unlabeled_cells.all(axis=1) if self.label_matrix.shape[1] else np.zeros(n, dtype=bool)
        n_labeled = int(labeled.sum())
        if not labeled[:n_labeled].all():
            raise DatasetFormatError("labeled examples must occupy the first l indices")

        if self.permutation.shape != (n,):
            raise DatasetFormatError("permutation must have one entry per example")
        if self.latent is not None and self.latent.shape[0] != n:
            raise DatasetFormatError(f"row count mismatch: latent coordinates have {self.latent.shape[0]} rows")

        if not self.view_columns:
            object.__setattr__(
                self, "view_columns", tuple(tuple(f"f{j}" for j in range(v.shape[1])) for v in self.views)
            )
        for name, columns, view in zip(self.view_names, self.view_columns, self.views):
            if len(columns) != view.shape[1]:
                raise DatasetFormatError(f"view {name}: {len(columns)} column names for {view.shape[1]} columns")

        for array in (*self.views, self.label_matrix, self.permutation):
            _readonly(array)
        if self.latent is not None:
            _readonly(self.latent)

    @classmethod
    def build(
        cls,
        views: Sequence[npt.ArrayLike],
        view_names: Sequence[str],
        labels: npt.ArrayLike,
        class_names: Optional[Sequence[str]] = None,
        view_columns: Optional[Sequence[Sequence[str]]] = None,
        latent: Optional[npt.ArrayLike] = None,
        permutation: Optional[npt.ArrayLike] = None,
    ) -> "MultiviewDataset":
        """Validate raw arrays and move labeled examples to the front, remembering where each example came from."""
        label_matrix = np.asarray(labels, dtype=np.int8)
        if label_matrix.ndim == 1:
            label_matrix = label_matrix[:, np.newaxis]
        if class_names is not None:
            names = tuple(class_names)
        else:
            names = tuple(f"class{c}" for c in range(label_matrix.shape[1]))
        if len(names) == 1 and class_names is None:
            names = ("label",)

        float_views = [np.array(v, dtype=np.float64, copy=True) for v in views]
        for name, view in zip(view_names, float_views):
            if view.ndim == 1:
                raise DatasetFormatError(f"view {name}: expected a 2-D feature matrix")

        base_permutation = (
            np.arange(label_matrix.shape[0], dtype=np.int64)
            if permutation is None
            else np.asarray(permutation, dtype=np.int64)
        )
        labeled = (label_matrix != Label.UNLABELED).any(axis=1)
        order = np.concatenate([np.flatnonzero(labeled), np.flatnonzero(~labeled)])

        latent_array = None if latent is None else np.array(latent, dtype=np.float64, copy=True)
        if latent_array is not None and latent_array.ndim == 1:
            latent_array = latent_array[:, np.newaxis]

        def _reorder(array: np.ndarray) -> np.ndarray:
            if array.shape[0] != label_matrix.shape[0]:
                # left alone so that __post_init__ reports the mismatch
                return array
            return np.ascontiguousarray(array[order])

        return cls(
            views=tuple(_reorder(v) for v in float_views),
            view_names=tuple(view_names),
            label_matrix=_reorder(label_matrix),
            class_names=names,
            permutation=_reorder(base_permutation),
            view_columns=tuple(tuple(c) for c in view_columns) if view_columns else (),
            latent=None if latent_array is None else _reorder(latent_array),
        )

    @property
    def n_examples(self) -> int:
        return int(self.label_matrix.shape[0])

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def labeled_mask(self) -> npt.NDArray[np.bool_]:
        return (self.label_matrix != Label.UNLABELED).any(axis=1)

    @property
    def n_labeled(self) -> int:
        return int(self.labeled_mask.sum())

    @property
    def n_unlabeled(self) -> int:
        return self.n_examples - self.n_labeled

    @property
    def view_widths(self) -> Tuple[int, ...]:
        return tuple(int(v.shape[1]) for v in self.views)

    @property
    def labels(self) -> LabelArray:
        """The label vector of a single-class dataset."""
        if len(self.class_names) != 1:
            raise DatasetFormatError(f"dataset has {len(self.class_names)} classes, use task(name)")
        return self.label_matrix[:, 0]

    def task(self, class_name: str) -> LabelArray:
        """The +1/-1/0 vector of one binary one-vs-rest task."""
        if class_name not in self.class_names:
            raise DatasetFormatError(f"unknown class {class_name}, expected one of {self.class_names}")
        return self.label_matrix[:, self.class_names.index(class_name)]

    def view(self, name: str) -> FloatArray:
        if name not in self.view_names:
            raise DatasetFormatError(f"unknown view {name}, expected one of {self.view_names}")
        return self.views[self.view_names.index(name)]

    def content_digest(self) -> bytes:
        """SHA-256 over view names, shapes, feature bytes, classes and labels, in the current example order."""
        digest = hashlib.sha256()
        for name, view in zip(self.view_names, self.views):
            digest.update(name.encode())
            digest.update(np.asarray(view.shape, dtype="<i8").tobytes())
            digest.update(np.ascontiguousarray(view, dtype="<f8").tobytes())
        for class_name in self.class_names:
            digest.update(class_name.encode())
        digest.update(np.ascontiguousarray(self.label_matrix, dtype="<i1").tobytes())
        return digest.digest()

    def content_hash(self) -> str:
        return self.content_digest().hex()

    def with_views(
        self,
        views: Sequence[FloatArray],
        view_names: Sequence[str],
        view_columns: Optional[Sequence[Sequence[str]]] = None,
    ) -> "MultiviewDataset":
        """Same examples and labels, different feature views."""
        return replace(
            self,
            views=tuple(np.array(v, dtype=np.float64, copy=True) for v in views),
            view_names=tuple(view_names),
            view_columns=tuple(tuple(c) for c in view_columns) if view_columns else (),
            label_matrix=self.label_matrix.copy(),
            permutation=self.permutation.copy(),
            latent=None if self.latent is None else self.latent.copy(),
        )

    def select_views(self, names: Sequence[str]) -> "MultiviewDataset":
        for name in names:
            self.view(name)
        indices = [self.view_names.index(name) for name in names]
        return self.with_views(
            [self.views[i] for i in indices],
            [self.view_names[i] for i in indices],
            [self.view_columns[i] for i in indices],
        )

    def with_labels(self, label_matrix: npt.ArrayLike) -> "MultiviewDataset":
        """Replace the labels and re-apply the labeled-first ordering."""
        return MultiviewDataset.build(
            self.views,
            self.view_names,
            label_matrix,
            class_names=self.class_names,
            view_columns=self.view_columns,
            latent=self.latent,
            permutation=self.permutation,
        )

    def subset(self, indices: npt.ArrayLike) -> "MultiviewDataset":
        """Examples at the given indices (current order), re-sorted labeled-first."""
        index_array = np.asarray(indices, dtype=np.int64)
        return MultiviewDataset.build(
            [v[index_array] for v in self.views],
            self.view_names,
            self.label_matrix[index_array],
            class_names=self.class_names,
            view_columns=self.view_columns,
            latent=None if self.latent is None else self.latent[index_array],
            permutation=self.permutation[index_array],
        )


@dataclass(frozen=True)
class LabelMask:
    """The examples whose ground-truth labels stay visible for one training run."""

    labeled_indices: Tuple[int, ...]
    fraction: float
    seed: int
    n_candidates: int = field(default=0)

    def __post_init__(self) -> None:
        if not 0.0 < self.fraction <= 1.0:
            raise LabelMaskError(f"label fraction must be in (0, 1], got {self.fraction}")
        if len(set(self.labeled_indices)) != len(self.labeled_indices):
            raise LabelMaskError("labeled indices must be unique")
        if self.n_candidates and len(self.labeled_indices) != round_half_up(self.fraction * self.n_candidates):
            raise LabelMaskError("mask size must equal round(fraction * n)")


def _stratified_pick(
    strata: Sequence[IntArray], total: int, rng: np.random.Generator, keep_every_stratum: bool
) -> IntArray:
    """Draw `total` indices spread over the strata proportionally (largest remainder), at least one per stratum."""
    sizes = np.array([len(s) for s in strata], dtype=np.int64)
    quotas = np.floor(total * sizes / sizes.sum()).astype(np.int64)
    remainders = total * sizes / sizes.sum() - quotas
    for position in np.argsort(-remainders, kind="stable")[: total - int(quotas.sum())]:
        quotas[position] += 1

    if keep_every_stratum and total >= len(strata):
        for empty in np.flatnonzero((quotas == 0) & (sizes > 0)):
            donor = int(np.argmax(quotas))
            quotas[donor] -= 1
            quotas[empty] += 1

    picked: List[IntArray] = []
    for stratum, quota in zip(strata, quotas):
        picked.append(rng.permutation(stratum)[:quota])
    return np.sort(np.concatenate(picked)) if picked else np.array([], dtype=np.int64)


def _class_strata(labels: LabelArray, candidates: IntArray) -> List[IntArray]:
    strata = [candidates[labels[candidates] == value] for value in (Label.POSITIVE, Label.NEGATIVE)]
    return [s for s in strata if len(s)]


def split_labels(
    dataset: MultiviewDataset, fraction: float, seed: int, class_name: Optional[str] = None
) -> LabelMask:
    """Pick a reproducible, class-stratified subset of the ground-truth-labeled examples to keep labeled."""
    if not 0.0 < fraction <= 1.0:
        raise LabelMaskError(f"label fraction must be in (0, 1], got {fraction}")

    candidates = np.flatnonzero(dataset.labeled_mask)
    if len(candidates) < 2:
        raise LabelMaskError("need at least 2 examples with ground-truth labels to build a mask")

    total = round_half_up(fraction * len(candidates))
    if total == 0:
        raise LabelMaskError(f"fraction {fraction} of {len(candidates)} labeled examples yields zero labels")

    labels = dataset.task(class_name) if class_name else dataset.label_matrix[:, 0]
    rng = np.random.default_rng(seed)
    picked = _stratified_pick(_class_strata(labels, candidates), total, rng, keep_every_stratum=True)
    return LabelMask(
        labeled_indices=tuple(int(i) for i in picked), fraction=fraction, seed=seed, n_candidates=len(candidates)
    )


def apply_mask(dataset: MultiviewDataset, mask: LabelMask) -> MultiviewDataset:
    """Hide every label outside the mask and restore the labeled-first ordering."""
    if mask.labeled_indices and max(mask.labeled_indices) >= dataset.n_examples:
        raise LabelMaskError("mask refers to examples outside the dataset")

    keep = np.zeros(dataset.n_examples, dtype=bool)
    keep[list(mask.labeled_indices)] = True
    if (keep & ~dataset.labeled_mask).any():
        raise LabelMaskError("mask keeps examples that have no ground-truth label")

    masked = dataset.label_matrix.copy()
    masked[~keep] = Label.UNLABELED
    return dataset.with_labels(masked)


def train_test_split(
    dataset: MultiviewDataset, test_fraction: float, seed: int
) -> Tuple[MultiviewDataset, MultiviewDataset]:
    """Stratified held-out split; labeled examples are stratified by the first class, unlabeled ones form a stratum."""
    if not 0.0 < test_fraction < 1.0:
        raise LabelMaskError(f"test fraction must be in (0, 1), got {test_fraction}")

    n_test = round_half_up(test_fraction * dataset.n_examples)
    if n_test == 0 or n_test == dataset.n_examples:
        raise LabelMaskError(f"test fraction {test_fraction} leaves an empty side for n={dataset.n_examples}")

    labeled = np.flatnonzero(dataset.labeled_mask)
    strata = _class_strata(dataset.label_matrix[:, 0], labeled)
    unlabeled = np.flatnonzero(~dataset.labeled_mask)
    if len(unlabeled):
        strata.append(unlabeled)

    test_indices = _stratified_pick(strata, n_test, np.random.default_rng(seed), keep_every_stratum=False)
    train_indices = np.setdiff1d(np.arange(dataset.n_examples), test_indices)
    return dataset.subset(train_indices), dataset.subset(test_indices)


@dataclass(frozen=True)
class ViewScaler:
    """Per-view standardization statistics, fit on training views and replayed on test views."""

    means: Tuple[FloatArray, ...]
    scales: Tuple[FloatArray, ...]

    @classmethod
    def fit(cls, views: Sequence[FloatArray]) -> "ViewScaler":
        means = tuple(np.asarray(v, dtype=np.float64).mean(axis=0) for v in views)
        scales = []
        for view in views:
            std = np.asarray(view, dtype=np.float64).std(axis=0)
            # constant columns are shifted but not scaled
            scales.append(np.where(std > 0.0, std, 1.0))
        return cls(means=means, scales=tuple(scales))

    def transform(self, views: Sequence[FloatArray]) -> List[FloatArray]:
        if len(views) != len(self.means):
            raise DatasetFormatError(f"scaler fit on {len(self.means)} views, got {len(views)}")
        return [(np.asarray(v, dtype=np.float64) - m) / s for v, m, s in zip(views, self.means, self.scales)]


def standardize(dataset: MultiviewDataset) -> Tuple[MultiviewDataset, ViewScaler]:
    scaler = ViewScaler.fit(dataset.views)
    return dataset.with_views(scaler.transform(dataset.views), dataset.view_names, dataset.view_columns), scaler


def _parse_number(text: str, source: str, row: int, column: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DatasetFormatError(f"{source}: non-numeric cell {text!r} at row {row}, column {column}")


def _read_numeric_csv(path: Path) -> Tuple[List[str], List[List[float]]]:
    with open(path, newline="", encoding="utf-8") as csv_file:
        rows = list(csv.reader(csv_file))
    if not rows:
        raise DatasetFormatError(f"{path.name}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    values = [[_parse_number(cell, path.name, r, c) for c, cell in enumerate(row)] for r, row in enumerate(body)]
    for r, row in enumerate(values):
        if len(row) != len(header):
            raise DatasetFormatError(f"{path.name}: row {r} has {len(row)} cells, header has {len(header)}")
    return header, values


def _read_labels(path: Path) -> Tuple[List[str], LabelArray]:
    header, values = _read_numeric_csv(path)
    if not header or header[0] != "index" or len(header) < 2:
        raise DatasetFormatError(f"{path.name}: expected header 'index,<label columns>'")

    indices = [int(row[0]) for row in values]
    if sorted(indices) != list(range(len(indices))):
        raise DatasetFormatError(f"{path.name}: indices must be exactly 0..n-1")

    label_matrix = np.zeros((len(values), len(header) - 1), dtype=np.int8)
    for index, row in zip(indices, values):
        for column, value in enumerate(row[1:]):
            if value not in (Label.NEGATIVE, Label.UNLABELED, Label.POSITIVE):
                raise DatasetFormatError(f"{path.name}: label {value} of example {index} is not +1, -1 or 0")
            label_matrix[index, column] = int(value)
    return header[1:], label_matrix


def load_dataset(root: Path) -> MultiviewDataset:
    """Read `labels.csv`, every `view_<name>.csv` and the optional `latent.csv` from a directory."""
    if not root.is_dir():
        raise FileNotFoundError(f"not found: {root}")
    labels_path = root / LABELS_FILENAME
    if not labels_path.exists():
        raise FileNotFoundError(f"not found: {labels_path}")

    class_names, label_matrix = _read_labels(labels_path)
    n = label_matrix.shape[0]

    view_paths = sorted(root.glob(f"{VIEW_FILE_PREFIX}*.csv"))
    if not view_paths:
        raise DatasetFormatError(f"{root}: empty views, no {VIEW_FILE_PREFIX}<name>.csv files")

    views, names, columns = [], [], []
    for view_path in view_paths:
        header, values = _read_numeric_csv(view_path)
        if not header:
            raise DatasetFormatError(f"{view_path.name}: empty view")
        if len(values) != n:
            raise DatasetFormatError(
                f"row count mismatch: {LABELS_FILENAME} has {n} rows, {view_path.name} has {len(values)}"
            )
        views.append(np.array(values, dtype=np.float64).reshape(n, len(header)))
        names.append(view_path.stem[len(VIEW_FILE_PREFIX) :])
        columns.append(header)

    latent = None
    latent_path = root / LATENT_FILENAME
    if latent_path.exists():
        latent_header, latent_values = _read_numeric_csv(latent_path)
        if len(latent_values) != n:
            raise DatasetFormatError(f"row count mismatch: {LATENT_FILENAME} has {len(latent_values)} rows")
        latent = np.array(latent_values, dtype=np.float64).reshape(n, len(latent_header))

    dataset = MultiviewDataset.build(
        views, names, label_matrix, class_names=class_names, view_columns=columns, latent=latent
    )
    _warn_on_label_shape(dataset, root)
    logger.info(f"Loaded {root}: n={dataset.n_examples} l={dataset.n_labeled} views={dataset.view_names}")
    return dataset


def _warn_on_label_shape(dataset: MultiviewDataset, source: Path) -> None:
    if dataset.n_labeled == 0:
        logger.warning(f"{source}: every example is unlabeled")
        return
    for class_name in dataset.class_names:
        present = set(np.unique(dataset.task(class_name)[: dataset.n_labeled]).tolist())
        if len(present) < 2:
            logger.warning(f"{source}: labeled examples of {class_name} contain a single class {present}")


def save_dataset(dataset: MultiviewDataset, root: Path) -> None:
    """Write the canonical CSV layout, indexed 0..n-1 in the examples' original relative order."""
    root.mkdir(parents=True, exist_ok=True)
    original_order = np.argsort(dataset.permutation, kind="stable")

    with open(root / LABELS_FILENAME, "w", newline="", encoding="utf-8") as labels_file:
        writer = csv.writer(labels_file, lineterminator="\n")
        writer.writerow(["index", *dataset.class_names])
        for index, row in enumerate(dataset.label_matrix[original_order]):
            writer.writerow([index, *(int(v) for v in row)])

    def _write_matrix(path: Path, header: Sequence[str], matrix: FloatArray) -> None:
        with open(path, "w", newline="", encoding="utf-8") as matrix_file:
            writer = csv.writer(matrix_file, lineterminator="\n")
            writer.writerow(header)
            for row in matrix[original_order]:
                writer.writerow([repr(float(v)) for v in row])

    for name, columns, view in zip(dataset.view_names, dataset.view_columns, dataset.views):
        _write_matrix(root / f"{VIEW_FILE_PREFIX}{name}.csv", columns, view)
    if dataset.latent is not None:
        _write_matrix(root / LATENT_FILENAME, [f"z{j}" for j in range(dataset.latent.shape[1])], dataset.latent)


def class_balance(dataset: MultiviewDataset) -> Dict[str, Tuple[int, int]]:
    """(positives, negatives) among the labeled examples of every class."""
    labeled = dataset.label_matrix[: dataset.n_labeled]
    return {
        name: (int((labeled[:, c] == Label.POSITIVE).sum()), int((labeled[:, c] == Label.NEGATIVE).sum()))
        for c, name in enumerate(dataset.class_names)
    }
