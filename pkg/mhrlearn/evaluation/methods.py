"""Method tags naming the baseline and multiview configurations.

    m{Lap,Hes}{SVM,LS}           learned kernel and regularizer weights over every view
    {Con,Ave}{SVM,LS}            no manifold term; concatenated features or the average kernel
    {Lap,Hes}{C,A}{SVM,LS}       manifold term on concatenated features or with average kernel and regularizer
    {Lap,Hes}{SVM,LS}:<view>     manifold term on a single view
    {SVM,KLS,LS}:<view>          single view, no manifold term

A single-view tag may omit `:<view>` when the dataset has one view, and `:*` expands to one tag per view.
"""
import re
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from mhrlearn.dataset import FloatArray, MultiviewDataset, ViewScaler
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold import ManifoldKind
from mhrlearn.solvers import LossKind, ObjectiveConfig, TrainedModel, ViewBank, fit_alternating, predict

logger = mhrlearn_logger.getChild(__file__)


class UnknownMethodError(Exception):
    """Raised when a method tag does not match the configuration grammar or names an unknown view."""


class ViewMode(IntEnum):
    SINGLE = 0
    CONCAT = 1
    AVERAGE = 2
    MULTIVIEW = 3


@dataclass(frozen=True)
class MethodSpec:
    tag: str
    loss: LossKind
    regularizer: ManifoldKind
    view_mode: ViewMode
    view: Optional[str] = None

    @property
    def learns_weights(self) -> bool:
        return self.view_mode == ViewMode.MULTIVIEW


_SOLVERS = {"SVM": LossKind.HINGE, "LS": LossKind.SQUARED, "KLS": LossKind.SQUARED}
_REGULARIZERS = {"Lap": ManifoldKind.LAPLACIAN, "Hes": ManifoldKind.HESSIAN}

_MULTIVIEW = re.compile(r"^m(Lap|Hes)(SVM|LS)$")
_UNREGULARIZED = re.compile(r"^(Con|Ave)(SVM|LS)$")
_REGULARIZED = re.compile(r"^(Lap|Hes)(C|A)?(SVM|LS)(?::(.+))?$")
_PLAIN = re.compile(r"^(SVM|KLS|LS)(?::(.+))?$")


def parse_method(tag: str) -> MethodSpec:
    tag = tag.strip()
    match = _MULTIVIEW.match(tag)
    if match:
        return MethodSpec(tag, _SOLVERS[match.group(2)], _REGULARIZERS[match.group(1)], ViewMode.MULTIVIEW)

    match = _UNREGULARIZED.match(tag)
    if match:
        mode = ViewMode.CONCAT if match.group(1) == "Con" else ViewMode.AVERAGE
        return MethodSpec(tag, _SOLVERS[match.group(2)], ManifoldKind.NONE, mode)

    match = _REGULARIZED.match(tag)
    if match:
        regularizer, mode_letter, solver, view = match.groups()
        if mode_letter and view:
            raise UnknownMethodError(f"{tag}: concatenated and average-kernel methods take no view")
        mode = {"C": ViewMode.CONCAT, "A": ViewMode.AVERAGE, None: ViewMode.SINGLE}[mode_letter]
        return MethodSpec(tag, _SOLVERS[solver], _REGULARIZERS[regularizer], mode, view)

    match = _PLAIN.match(tag)
    if match:
        return MethodSpec(tag, _SOLVERS[match.group(1)], ManifoldKind.NONE, ViewMode.SINGLE, match.group(2))

    raise UnknownMethodError(f"unknown method tag {tag!r}")


def expand_methods(tags: Sequence[str], view_names: Sequence[str]) -> List[MethodSpec]:
    """Parse tags against a dataset's views: expand `:*`, fill in the view of single-view datasets."""
    methods: List[MethodSpec] = []
    for tag in tags:
        method = parse_method(tag)
        if method.view_mode != ViewMode.SINGLE:
            methods.append(method)
            continue
        if method.view == "*":
            base = method.tag[: -len(":*")]
            methods.extend(replace(method, tag=f"{base}:{name}", view=name) for name in view_names)
        elif method.view is None:
            if len(view_names) != 1:
                raise UnknownMethodError(f"{tag}: name a view with {tag}:<view> or {tag}:*")
            methods.append(replace(method, view=view_names[0]))
        elif method.view not in view_names:
            raise UnknownMethodError(f"{tag}: unknown view {method.view}, expected one of {list(view_names)}")
        else:
            methods.append(method)
    return methods


def default_method(kind: ManifoldKind, loss: LossKind) -> str:
    solver = "SVM" if loss == LossKind.HINGE else "LS"
    return f"m{'Lap' if kind == ManifoldKind.LAPLACIAN else 'Hes'}{solver}"


def _sub_scaler(scaler: Optional[ViewScaler], indices: Sequence[int], concatenated: bool) -> Optional[ViewScaler]:
    if scaler is None:
        return None
    means = [scaler.means[i] for i in indices]
    scales = [scaler.scales[i] for i in indices]
    if concatenated:
        return ViewScaler(means=(np.concatenate(means),), scales=(np.concatenate(scales),))
    return ViewScaler(means=tuple(means), scales=tuple(scales))


def method_bank(method: MethodSpec, bank: ViewBank) -> Tuple[ViewBank, List[int]]:
    """The view bank a method trains on and the input views (indices into the full bank) it reads."""
    if method.view_mode == ViewMode.SINGLE:
        if method.view is None:
            raise UnknownMethodError(f"{method.tag}: no view selected")
        return bank.select(method.view), [bank.index(method.view)]
    indices = list(range(len(bank.view_names)))
    if method.view_mode == ViewMode.CONCAT:
        return bank.concat(), indices
    return bank, indices


def fit_method(
    method: MethodSpec,
    dataset: MultiviewDataset,
    bank: ViewBank,
    config: ObjectiveConfig,
    scaler: Optional[ViewScaler] = None,
    class_names: Optional[Sequence[str]] = None,
) -> Dict[str, TrainedModel]:
    """One binary model per class; classes without both labels among the labeled examples are skipped."""
    trained_bank, indices = method_bank(method, bank)
    concatenated = method.view_mode == ViewMode.CONCAT and len(bank.view_names) > 1
    method_config = replace(config, loss=method.loss)

    models: Dict[str, TrainedModel] = {}
    for class_name in class_names or dataset.class_names:
        labeled = dataset.task(class_name)[: dataset.n_labeled]
        if not ((labeled > 0).any() and (labeled < 0).any()):
            logger.warning(f"{method.tag}: skipping class {class_name}, its labeled examples hold a single class")
            continue
        models[class_name] = fit_alternating(
            dataset,
            trained_bank.kernel_specs,
            method.regularizer,
            method_config,
            settings=trained_bank.settings,
            class_name=class_name,
            learn_theta=method.learns_weights,
            learn_beta=method.learns_weights,
            bank=trained_bank,
            scaler=_sub_scaler(scaler, indices, concatenated),
            concatenated=concatenated,
        )
    return models


def method_inputs(method: MethodSpec, view_names: Sequence[str], views: Sequence[FloatArray]) -> List[FloatArray]:
    """Raw views a trained method reads at prediction time."""
    if method.view_mode == ViewMode.SINGLE:
        return [views[list(view_names).index(method.view)]]
    return list(views)


def score_method(
    method: MethodSpec, models: Dict[str, TrainedModel], test: MultiviewDataset
) -> Dict[str, FloatArray]:
    inputs = method_inputs(method, test.view_names, test.views)
    return {class_name: predict(model, inputs) for class_name, model in models.items()}
