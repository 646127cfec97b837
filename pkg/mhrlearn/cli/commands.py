import csv
import json
from contextlib import contextmanager
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.linalg import eigvalsh

from mhrlearn import __version__
from mhrlearn.cli.config import RunConfig, objective_section
from mhrlearn.dataset import (
    FloatArray,
    MultiviewDataset,
    ViewScaler,
    apply_mask,
    load_dataset,
    make_synthetic,
    split_labels,
    standardize,
)
from mhrlearn.evaluation import (
    MethodSpec,
    UnknownMethodError,
    ViewMode,
    expand_methods,
    fit_method,
    run_sweep,
    tune_grid,
    write_reports_csv,
    write_summary,
    write_tune_csv,
)
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold import ManifoldKind, build_manifold, neighbor_graph
from mhrlearn.solvers import TrainedModel, ViewBank, load_model, predict, save_model

logger = mhrlearn_logger.getChild(__file__)

MODEL_FILENAME = "model{suffix}.mhr"
TRACE_FILENAME = "trace{suffix}.csv"
MANIFEST_FILENAME = "manifest.json"
REPORTS_FILENAME = "reports.csv"
SUMMARY_FILENAME = "summary.txt"
TUNE_FILENAME = "tune.csv"
BEST_CONFIG_FILENAME = "best.ini"
MANIFOLD_FILENAME = "manifold.csv"


class StageError(Exception):
    """Raised by a CLI command when one of its stages fails; the message starts with the stage name."""

    def __init__(self, stage_name: str, cause: BaseException) -> None:
        super().__init__(f"{stage_name}: {cause}")
        self.stage = stage_name
        self.cause = cause


@contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def load_run_dataset(config: RunConfig) -> MultiviewDataset:
    if config.dataset_path is not None:
        return load_dataset(config.dataset_path)
    logger.info(f"No dataset path configured, generating {config.generator.name}")
    return make_synthetic(config.generator)


def _single_method(config: RunConfig, view_names: Tuple[str, ...]) -> MethodSpec:
    methods = expand_methods(config.method_tags, view_names)
    if len(methods) != 1:
        raise UnknownMethodError(f"this command trains one method, {list(config.method_tags)} names {len(methods)}")
    return methods[0]


def _build_matrices(method: MethodSpec, bank: ViewBank, manifolds: bool) -> None:
    """Build the kernels (or regularizers) the method will read, so failures surface in their own stage."""
    if method.view_mode == ViewMode.CONCAT:
        target, indices = bank.concat(), [0]
    elif method.view_mode == ViewMode.SINGLE and method.view is not None:
        target, indices = bank, [bank.index(method.view)]
    else:
        target, indices = bank, list(range(len(bank.view_names)))
    for index in indices:
        if manifolds:
            target.manifold(index, method.regularizer)
        else:
            target.kernel(index)


def _write_trace(model: TrainedModel, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as trace_file:
        writer = csv.writer(trace_file, lineterminator="\n")
        writer.writerow(["round", "step", "objective"])
        for entry in model.objective_trace:
            writer.writerow([entry.round, entry.step.name.lower(), repr(entry.objective)])


def _kernel_record(model: TrainedModel) -> Dict[str, Dict[str, object]]:
    return {
        name: {
            "family": spec.family.name.lower(),
            "bandwidth": spec.bandwidth,
            "degree": spec.degree,
            "offset": spec.offset,
            "scale": spec.scale,
        }
        for name, spec in zip(model.view_names, model.kernel_specs)
    }


def cmd_train(config: RunConfig) -> List[Path]:
    """Fit one model per class and write model files, objective traces and a manifest into `config.out`."""
    with stage("dataset"):
        dataset = load_run_dataset(config)
        dataset_hash = dataset.content_hash()
        if config.label_fraction is not None:
            dataset = apply_mask(dataset, split_labels(dataset, config.label_fraction, config.seed))
        scaler: Optional[ViewScaler] = None
        if config.standardize:
            dataset, scaler = standardize(dataset)
        method = _single_method(config, dataset.view_names)

    with stage("kernels"):
        bank = ViewBank.from_dataset(
            dataset,
            config.kernel_specs(dataset.view_names),
            config.manifold,
            config.concat_spec,
            workers=config.workers,
            cache_dir=config.cache_dir,
        )
        _build_matrices(method, bank, manifolds=False)

    with stage("manifold"):
        _build_matrices(method, bank, manifolds=True)

    with stage("solvers"):
        models = fit_method(method, dataset, bank, config.objective, scaler)
        if not models:
            raise ValueError("no class has both a positive and a negative labeled example")

    outputs: List[Path] = []
    with stage("io"):
        config.out.mkdir(parents=True, exist_ok=True)
        records = {}
        for class_name, model in models.items():
            suffix = "" if len(dataset.class_names) == 1 else f"-{class_name}"
            model_path = config.out / MODEL_FILENAME.format(suffix=suffix)
            trace_path = config.out / TRACE_FILENAME.format(suffix=suffix)
            digest = save_model(model, model_path)
            _write_trace(model, trace_path)
            outputs.extend([model_path, trace_path])
            records[class_name] = {
                "model": model_path.name,
                "trace": trace_path.name,
                "sha256": digest,
                "outer_rounds": model.outer_rounds,
                "objective": model.objective_trace[-1].objective,
                "theta": list(model.theta),
                "beta": list(model.beta),
                "kernels": _kernel_record(model),
            }

        manifest = {
            "version": __version__,
            "command": "train",
            "method": method.tag,
            "config": config.to_dict(),
            "dataset_sha256": dataset_hash,
            "n_examples": dataset.n_examples,
            "n_labeled": dataset.n_labeled,
            "models": records,
        }
        manifest_path = config.out / MANIFEST_FILENAME
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        outputs.append(manifest_path)
    logger.info(f"Trained {method.tag} for {len(models)} class(es) into {config.out}")
    return outputs


def model_inputs(model: TrainedModel, dataset: MultiviewDataset) -> List[FloatArray]:
    """The raw views of `dataset` that `model` reads, in the model's order."""
    if model.concatenated:
        return list(dataset.views)
    return [dataset.view(name) for name in model.view_names]


def cmd_predict(model_path: Path, data_path: Path, out_path: Path) -> List[Path]:
    """Score every example of a dataset and write `index,score,label` rows in the dataset's original order."""
    with stage("io"):
        model = load_model(model_path)
    with stage("dataset"):
        dataset = load_dataset(data_path)
    with stage("solvers"):
        scores = predict(model, model_inputs(model, dataset))

    with stage("io"):
        out_path.parent.mkdir(parents=True, exist_ok=True)
        original_order = np.argsort(dataset.permutation, kind="stable")
        with open(out_path, "w", newline="", encoding="utf-8") as scores_file:
            writer = csv.writer(scores_file, lineterminator="\n")
            writer.writerow(["index", "score", "label"])
            for row in original_order:
                score = float(scores[row])
                writer.writerow([int(dataset.permutation[row]), repr(score), 1 if score >= 0.0 else -1])
    return [out_path]


def cmd_sweep(config: RunConfig) -> List[Path]:
    with stage("dataset"):
        dataset = load_run_dataset(config)
        test_dataset = load_dataset(config.test_path) if config.test_path is not None else None
        settings = config.sweep_settings()
        kernel_specs = config.kernel_specs(dataset.view_names)

    with stage("eval"):
        reports = run_sweep(
            dataset,
            config.method_tags,
            settings,
            config.objective,
            kernel_specs,
            config.manifold,
            test_dataset=test_dataset,
            concat_spec=config.concat_spec,
        )

    with stage("io"):
        reports_path = config.out / REPORTS_FILENAME
        summary_path = config.out / SUMMARY_FILENAME
        write_reports_csv(reports, reports_path)
        write_summary(reports, summary_path)
    return [reports_path, summary_path]


def cmd_tune(config: RunConfig) -> List[Path]:
    """Grid search over 10^e for the configured gammas; writes the grid table and the winning [objective]."""
    with stage("dataset"):
        dataset = load_run_dataset(config)
        if len(config.method_tags) != 1:
            raise UnknownMethodError(f"tuning needs exactly one method, got {list(config.method_tags)}")
        kernel_specs = config.kernel_specs(dataset.view_names)

    with stage("eval"):
        result = tune_grid(
            dataset,
            config.method_tags[0],
            config.grid_exp,
            config.sweep_settings(),
            config.objective,
            kernel_specs,
            config.manifold,
            keys=config.tune_keys,
            concat_spec=config.concat_spec,
        )

    with stage("io"):
        tune_path = config.out / TUNE_FILENAME
        best_path = config.out / BEST_CONFIG_FILENAME
        write_tune_csv(result, tune_path)
        best_path.write_text(
            f"# {config.method_tags[0]} validation mAP {result.best_map!r}\n" + objective_section(result.best_config),
            encoding="utf-8",
        )
    return [tune_path, best_path]


@dataclass(frozen=True)
class ManifoldDiagnostics:
    """Spectrum and test-function energies of one view's Hessian energy (h_*) and Laplacian (l_*)."""

    view: str
    m: int
    k: int
    h_min_eig: float
    h_max_eig: float
    l_min_eig: float
    l_max_eig: float
    h_constant: float
    l_constant: float
    h_linear: float
    l_linear: float
    h_quadratic: float


def manifold_diagnostics(dataset: MultiviewDataset, config: RunConfig) -> List[ManifoldDiagnostics]:
    """Linear and quadratic test functions come from the latent coordinates; without them those columns are NaN."""
    constant = np.ones(dataset.n_examples)
    linear: Optional[FloatArray] = None
    quadratic: Optional[FloatArray] = None
    if dataset.latent is not None:
        latent = dataset.latent - dataset.latent.mean(axis=0)
        linear = latent.sum(axis=1)
        quadratic = latent[:, 0] ** 2

    rows = []
    for name, view in zip(dataset.view_names, dataset.views):
        graph = neighbor_graph(view, config.manifold, config.workers)
        hessian = build_manifold(view, config.manifold, ManifoldKind.HESSIAN, name, graph, config.workers)
        lap = build_manifold(view, config.manifold, ManifoldKind.LAPLACIAN, name, graph, config.workers)
        h_eigs = eigvalsh(hessian.matrix)
        l_eigs = eigvalsh(lap.matrix)
        rows.append(
            ManifoldDiagnostics(
                view=name,
                m=int(hessian.intrinsic_dim or 0),
                k=graph.k,
                h_min_eig=float(h_eigs[0]),
                h_max_eig=float(h_eigs[-1]),
                l_min_eig=float(l_eigs[0]),
                l_max_eig=float(l_eigs[-1]),
                h_constant=hessian.energy(constant),
                l_constant=lap.energy(constant),
                h_linear=float("nan") if linear is None else hessian.energy(linear),
                l_linear=float("nan") if linear is None else lap.energy(linear),
                h_quadratic=float("nan") if quadratic is None else hessian.energy(quadratic),
            )
        )
        logger.info(f"{name}: m={rows[-1].m} k={graph.k} H eigenvalues [{h_eigs[0]:.3g}, {h_eigs[-1]:.3g}]")
    return rows


def cmd_inspect_manifold(config: RunConfig) -> List[Path]:
    with stage("dataset"):
        dataset = load_run_dataset(config)
        if config.standardize:
            dataset, _ = standardize(dataset)
    with stage("manifold"):
        rows = manifold_diagnostics(dataset, config)
    with stage("io"):
        config.out.mkdir(parents=True, exist_ok=True)
        path = config.out / MANIFOLD_FILENAME
        with open(path, "w", newline="", encoding="utf-8") as manifold_file:
            writer = csv.writer(manifold_file, lineterminator="\n")
            writer.writerow([f.name for f in fields(ManifoldDiagnostics)])
            for row in rows:
                writer.writerow([value if isinstance(value, (str, int)) else repr(value) for value in astuple(row)])
    return [path]
