import itertools
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from mhrlearn.dataset import (
    LabelMask,
    MultiviewDataset,
    ViewScaler,
    apply_mask,
    split_labels,
    standardize,
    train_test_split,
)
from mhrlearn.evaluation.methods import (
    MethodSpec,
    UnknownMethodError,
    ViewMode,
    expand_methods,
    fit_method,
    score_method,
)
from mhrlearn.evaluation.metrics import RankedPredictions, UndefinedAveragePrecisionError, average_precision, mean_ap
from mhrlearn.kernels import KernelSpec
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold import ManifoldKind, ManifoldSettings
from mhrlearn.solvers import (
    MonotonicityViolationError,
    NonFiniteObjectiveError,
    ObjectiveConfig,
    SingularSystemError,
    ViewBank,
    relative_order,
)

logger = mhrlearn_logger.getChild(__file__)

DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.5, 0.7, 0.9)
DEFAULT_GRID_EXPONENTS = tuple(range(-10, 11))


@dataclass(frozen=True)
class SweepSettings:
    """Label-fraction protocol: held-out split, then `repeats` masks per fraction with seeds base_seed + repeat."""

    fractions: Tuple[float, ...] = DEFAULT_FRACTIONS
    repeats: int = 10
    base_seed: int = 0
    test_fraction: float = 0.5
    validation_fraction: float = 0.1
    tune_fraction: float = 0.1
    standardize: bool = False
    workers: int = 1
    cache_dir: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.fractions or any(not 0.0 < f <= 1.0 for f in self.fractions):
            raise ValueError(f"label fractions must lie in (0, 1], got {self.fractions}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True, order=True)
class EvalReport:
    """Result of one (method, fraction, repeat) cell. Ordering follows the cell key."""

    method: str
    fraction: float
    repeat: int
    seed: int = field(compare=False)
    class_aps: Tuple[Tuple[str, float], ...] = field(compare=False)
    map: float = field(compare=False)
    seconds: float = field(compare=False)

    def __post_init__(self) -> None:
        if any(not 0.0 <= ap <= 1.0 for _, ap in self.class_aps):
            raise ValueError(f"AP values must lie in [0, 1]: {self.class_aps}")


@dataclass(frozen=True)
class PreparedSplit:
    train: MultiviewDataset
    test: MultiviewDataset
    bank: ViewBank
    scaler: Optional[ViewScaler]


def prepare_split(
    train: MultiviewDataset,
    test: MultiviewDataset,
    kernel_specs: Sequence[KernelSpec],
    manifold_settings: ManifoldSettings,
    settings: SweepSettings,
    concat_spec: KernelSpec = KernelSpec(),
) -> PreparedSplit:
    """Standardize the training views if asked and wrap them in a view bank; test views stay raw."""
    scaler = None
    if settings.standardize:
        train, scaler = standardize(train)
    bank = ViewBank.from_dataset(
        train, kernel_specs, manifold_settings, concat_spec, workers=settings.workers, cache_dir=settings.cache_dir
    )
    return PreparedSplit(train=train, test=test, bank=bank, scaler=scaler)


def evaluate_scores(scores: Dict[str, np.ndarray], test: MultiviewDataset) -> Tuple[Tuple[str, float], ...]:
    """AP per class over the test examples that carry a ground-truth label."""
    labeled = test.labeled_mask
    aps = []
    for class_name, class_scores in scores.items():
        truth = test.task(class_name)
        try:
            preds = RankedPredictions.from_labels(class_scores[labeled], truth[labeled])
            aps.append((class_name, average_precision(preds)))
        except UndefinedAveragePrecisionError:
            logger.warning(f"class {class_name} has no positive test example, AP skipped")
    return tuple(aps)


def run_cell(
    method: MethodSpec,
    fraction: float,
    repeat: int,
    split: PreparedSplit,
    config: ObjectiveConfig,
    base_seed: int,
    mask: Optional[LabelMask] = None,
) -> EvalReport:
    started = time.perf_counter()
    seed = base_seed + repeat
    mask = mask or split_labels(split.train, fraction, seed)
    masked = apply_mask(split.train, mask)
    bank = split.bank.permuted(relative_order(split.train.permutation, masked.permutation))

    models = fit_method(method, masked, bank, config, split.scaler)
    class_aps = evaluate_scores(score_method(method, models, split.test), split.test)
    if not class_aps:
        raise UndefinedAveragePrecisionError(f"{method.tag}: no class could be evaluated")

    report = EvalReport(
        method=method.tag,
        fraction=fraction,
        repeat=repeat,
        seed=seed,
        class_aps=class_aps,
        map=mean_ap([ap for _, ap in class_aps]),
        seconds=time.perf_counter() - started,
    )
    logger.info(f"{method.tag} fraction={fraction} repeat={repeat}: mAP={report.map:.4f}")
    return report


def _needed_kinds(methods: Sequence[MethodSpec]) -> Tuple[List[ManifoldKind], bool]:
    kinds = sorted({m.regularizer for m in methods})
    return kinds, any(m.view_mode == ViewMode.CONCAT for m in methods)


def run_sweep(
    dataset: MultiviewDataset,
    methods: Sequence[str],
    settings: SweepSettings,
    config: ObjectiveConfig,
    kernel_specs: Sequence[KernelSpec],
    manifold_settings: ManifoldSettings = ManifoldSettings(),
    test_dataset: Optional[MultiviewDataset] = None,
    concat_spec: KernelSpec = KernelSpec(),
) -> List[EvalReport]:
    """Train and evaluate every (method, fraction, repeat) cell; reports come back sorted by that key."""
    if test_dataset is None:
        train, test = train_test_split(dataset, settings.test_fraction, settings.base_seed)
    else:
        train, test = dataset, test_dataset
    specs = expand_methods(methods, train.view_names)

    split = prepare_split(train, test, kernel_specs, manifold_settings, settings, concat_spec)
    kinds, concat = _needed_kinds(specs)
    split.bank.prepare(kinds, concat=concat)

    masks = {
        (fraction, repeat): split_labels(split.train, fraction, settings.base_seed + repeat)
        for fraction in settings.fractions
        for repeat in range(settings.repeats)
    }
    cells = [(m, f, r) for m in specs for f in settings.fractions for r in range(settings.repeats)]
    logger.info(
        f"Sweep: {len(cells)} cells over {len(specs)} methods, n_train={train.n_examples} n_test={test.n_examples}"
    )

    if settings.workers == 1:
        reports = [run_cell(m, f, r, split, config, settings.base_seed, masks[(f, r)]) for m, f, r in cells]
    else:
        reports = Parallel(n_jobs=settings.workers, prefer="threads")(
            delayed(run_cell)(m, f, r, split, config, settings.base_seed, masks[(f, r)]) for m, f, r in cells
        )
    return sorted(reports)


@dataclass(frozen=True)
class TuneResult:
    keys: Tuple[str, ...]
    table: Tuple[Tuple[Tuple[float, ...], float], ...]
    best_values: Tuple[float, ...]
    best_map: float
    best_config: ObjectiveConfig


TUNABLE_KEYS = ("gamma_a", "gamma_i", "gamma_theta", "gamma_beta")


def tune_grid(
    dataset: MultiviewDataset,
    method: str,
    exponents: Sequence[int],
    settings: SweepSettings,
    config: ObjectiveConfig,
    kernel_specs: Sequence[KernelSpec],
    manifold_settings: ManifoldSettings = ManifoldSettings(),
    keys: Sequence[str] = ("gamma_a", "gamma_i"),
    concat_spec: KernelSpec = KernelSpec(),
) -> TuneResult:
    """Exhaustive grid over 10^e for the chosen gammas, scored by validation mAP at the tuning label fraction.

    Grid points whose solve fails (singular or non-finite) score NaN and are never picked; ties go to the first
    grid point in row-major order.
    """
    unknown = set(keys) - set(TUNABLE_KEYS)
    if unknown or not keys:
        raise ValueError(f"tunable keys are {TUNABLE_KEYS}, got {list(keys)}")
    if not exponents:
        raise ValueError("empty exponent grid")

    train, validation = train_test_split(dataset, settings.validation_fraction, settings.base_seed)
    expanded = expand_methods([method], train.view_names)
    if len(expanded) != 1:
        raise UnknownMethodError(f"tuning needs exactly one method, {method} expands to {len(expanded)}")
    spec = expanded[0]
    split = prepare_split(train, validation, kernel_specs, manifold_settings, settings, concat_spec)
    kinds, concat = _needed_kinds([spec])
    split.bank.prepare(kinds, concat=concat)
    mask = split_labels(split.train, settings.tune_fraction, settings.base_seed)

    grid = [tuple(10.0**e for e in point) for point in itertools.product(exponents, repeat=len(keys))]

    def _score(values: Tuple[float, ...]) -> float:
        candidate = replace(config, **dict(zip(keys, values)))
        try:
            return run_cell(spec, settings.tune_fraction, 0, split, candidate, settings.base_seed, mask).map
        except (SingularSystemError, NonFiniteObjectiveError, MonotonicityViolationError) as exc:
            logger.warning(f"grid point {dict(zip(keys, values))} failed: {exc}")
            return float("nan")

    if settings.workers == 1:
        scores = [_score(values) for values in grid]
    else:
        scores = Parallel(n_jobs=settings.workers, prefer="threads")(delayed(_score)(values) for values in grid)

    best_index = -1
    for index, score in enumerate(scores):
        if np.isfinite(score) and (best_index < 0 or score > scores[best_index]):
            best_index = index
    if best_index < 0:
        raise ValueError("every grid point failed to train")

    best_values = grid[best_index]
    logger.info(f"Tuning {method}: best {dict(zip(keys, best_values))} validation mAP={scores[best_index]:.4f}")
    return TuneResult(
        keys=tuple(keys),
        table=tuple(zip(grid, scores)),
        best_values=best_values,
        best_map=scores[best_index],
        best_config=replace(config, **dict(zip(keys, best_values))),
    )
