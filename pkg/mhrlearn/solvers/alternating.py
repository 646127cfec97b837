import hashlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from mhrlearn.dataset import FloatArray, Label, MultiviewDataset, ViewScaler
from mhrlearn.kernels import GramKernel, KernelSpec, SimplexWeights, cross_gram, weighted_sum
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.manifold import ManifoldKind, ManifoldMatrix, ManifoldSettings
from mhrlearn.solvers.kls import fit_kls
from mhrlearn.solvers.objective import (
    LossKind,
    ObjectiveConfig,
    data_loss,
    mhr_objective,
    regularization,
    smoothed_hinge,
    smoothed_hinge_u,
)
from mhrlearn.solvers.simplex import accelerated_projected_gradient, project_onto_simplex, project_simplex
from mhrlearn.solvers.svm import fit_svm_nesterov
from mhrlearn.solvers.view_bank import ViewBank

logger = mhrlearn_logger.getChild(__file__)

# Allowed objective increase per step before the descent contract counts as broken
MONOTONICITY_SLACK = 1e-9
# Relative gap under which regularizer energies count as tied when gamma_beta is 0
TIE_TOLERANCE = 1e-12
# Continuation of the hinge theta step: at most this many smoothing levels, each a tenth of the previous
THETA_SMOOTHING_STAGES = 4
THETA_SMOOTHING_DECAY = 0.1


class MonotonicityViolationError(Exception):
    """Raised when an alternating step increases the objective beyond slack, which indicates a solver bug."""


class FingerprintMismatchError(Exception):
    """Raised when the training views handed to predict are not the ones the model was trained on."""


class TraceStep(IntEnum):
    INIT = 0
    ALPHA = 1
    THETA = 2
    BETA = 3


@dataclass(frozen=True)
class TraceEntry:
    round: int
    step: TraceStep
    objective: float


def solve_alpha(
    kernel: FloatArray,
    manifold: FloatArray,
    y: FloatArray,
    n_labeled: int,
    config: ObjectiveConfig,
    start: Optional[FloatArray] = None,
    score: Optional[Callable[[FloatArray], float]] = None,
) -> FloatArray:
    """Expansion coefficients for a fixed kernel and regularizer.

    The least-squares fit is closed-form and ignores `start` and `score`. The hinge fit runs from `start` and
    keeps its iterate with the lowest `score`.
    """
    if config.loss == LossKind.HINGE:
        return fit_svm_nesterov(kernel, manifold, y, n_labeled, config, start=start, score=score)
    return fit_kls(kernel, manifold, y, n_labeled, config)


def _spectral_norm(matrix: FloatArray) -> float:
    return float(np.abs(np.linalg.eigvalsh((matrix + matrix.T) / 2.0)).max())


def theta_objective(
    alpha: FloatArray,
    kernels: Sequence[FloatArray],
    manifold: FloatArray,
    y: FloatArray,
    n_labeled: int,
    config: ObjectiveConfig,
) -> Callable[[FloatArray], float]:
    """The exact objective as a function of theta alone, with alpha and the regularizer fixed."""
    expansions = np.column_stack([k @ alpha for k in kernels])
    linear = config.gamma_a * (alpha @ expansions)
    quadratic = expansions.T @ manifold @ expansions

    def objective(theta: FloatArray) -> float:
        f = expansions @ theta
        return (
            data_loss(f, y, n_labeled, config.loss)
            + float(linear @ theta)
            + config.gamma_i * float(theta @ quadratic @ theta)
            + config.gamma_theta * float(theta @ theta)
        )

    return objective


def _smoothed_hinge_theta(
    labeled: FloatArray,
    targets: FloatArray,
    scales: FloatArray,
    linear: FloatArray,
    curvature: FloatArray,
    mu: float,
    start: FloatArray,
    config: ObjectiveConfig,
    exact: Callable[[FloatArray], float],
) -> Tuple[FloatArray, int]:
    n_labeled = labeled.shape[0]
    lipschitz = float(((labeled**2).sum(axis=1) / scales).sum()) / (n_labeled * mu)
    lipschitz += 2.0 * _spectral_norm(curvature)

    def smoothed(theta: FloatArray) -> float:
        margin = 1.0 - targets * (labeled @ theta)
        loss = float(smoothed_hinge(margin, scales, mu).mean())
        return loss + float(linear @ theta) + float(theta @ curvature @ theta)

    def gradient(theta: FloatArray) -> FloatArray:
        margin = 1.0 - targets * (labeled @ theta)
        u = smoothed_hinge_u(margin, scales, mu)
        return -labeled.T @ (targets * u) / n_labeled + linear + 2.0 * curvature @ theta

    return accelerated_projected_gradient(
        smoothed, gradient, lipschitz, start, config.max_inner_iters, config.tol_inner, score=exact
    )


def solve_theta(
    alpha: FloatArray,
    kernels: Sequence[FloatArray],
    manifold: FloatArray,
    labels: FloatArray,
    n_labeled: int,
    config: ObjectiveConfig,
    start: Optional[SimplexWeights] = None,
) -> SimplexWeights:
    """Kernel weights minimizing the objective with alpha and the regularizer fixed.

    With f = P theta and P = [K_1 alpha, ..., K_V alpha] the objective is
    loss(P theta) + gamma_A a^T theta + gamma_I theta^T P^T M P theta + gamma_theta ||theta||^2 with
    a_k = alpha^T K_k alpha. The squared loss makes it a quadratic. The hinge is smoothed for the gradient, starting
    at `config.mu` and shrinking tenfold per stage while a stage still lowers the exact objective; every stage is
    warm-started and keeps its iterate with the best exact objective.
    """
    count = len(kernels)
    if count == 1:
        return SimplexWeights(np.ones(1))
    y = np.zeros(alpha.shape[0])
    y[:n_labeled] = np.asarray(labels, dtype=np.float64)[:n_labeled]

    expansions = np.column_stack([k @ alpha for k in kernels])
    labeled = expansions[:n_labeled]
    linear = config.gamma_a * (alpha @ expansions)
    quadratic = expansions.T @ manifold @ expansions
    quadratic = (quadratic + quadratic.T) / 2.0
    curvature = config.gamma_i * quadratic + config.gamma_theta * np.eye(count)
    exact = theta_objective(alpha, kernels, manifold, y, n_labeled, config)
    initial = project_onto_simplex(start.weights if start is not None else np.full(count, 1.0 / count))

    if config.loss == LossKind.SQUARED:
        data_curvature = labeled.T @ labeled / n_labeled
        lipschitz = 2.0 * _spectral_norm(data_curvature + curvature)

        def gradient(theta: FloatArray) -> FloatArray:
            residual = labeled @ theta - y[:n_labeled]
            return 2.0 * labeled.T @ residual / n_labeled + linear + 2.0 * curvature @ theta

        theta, iterations = accelerated_projected_gradient(
            exact, gradient, lipschitz, initial, config.max_inner_iters, config.tol_inner
        )
        logger.debug(f"theta step: {iterations} iterations, theta={np.round(theta, 4)}")
        return SimplexWeights(theta)

    # theta-independent bound on every row of any convex combination of the kernels
    scales = np.max([np.abs(k[:n_labeled]).max(axis=1) for k in kernels], axis=0)
    theta, best = initial, exact(initial)
    for stage in range(THETA_SMOOTHING_STAGES):
        mu = config.mu * THETA_SMOOTHING_DECAY**stage
        candidate, iterations = _smoothed_hinge_theta(
            labeled, y[:n_labeled], scales, linear, curvature, mu, theta, config, exact
        )
        value = exact(candidate)
        logger.debug(f"theta step, mu={mu:.3g}: {iterations} iterations, theta={np.round(candidate, 4)}")
        if not value < best:
            break
        theta, best = candidate, value
    return SimplexWeights(theta)


def regularizer_energies(
    alpha: FloatArray, kernel: FloatArray, manifolds: Sequence[FloatArray], gamma_i: float
) -> FloatArray:
    """h_j = gamma_I f^T M_j f with f = K alpha."""
    f = kernel @ alpha
    return np.array([gamma_i * float(f @ m @ f) for m in manifolds])


def solve_beta(
    alpha: FloatArray, kernel: FloatArray, manifolds: Sequence[FloatArray], config: ObjectiveConfig
) -> SimplexWeights:
    """Closed-form regularizer weights: the simplex projection of -h / (2 gamma_beta).

    With gamma_beta = 0 the problem is linear and all mass goes to the smallest energy, split evenly on ties.
    """
    energies = regularizer_energies(alpha, kernel, manifolds, config.gamma_i)
    if config.gamma_beta > 0:
        return project_simplex(-energies / (2.0 * config.gamma_beta))
    lowest = energies.min()
    ties = energies <= lowest + TIE_TOLERANCE * max(1.0, abs(lowest))
    return SimplexWeights(ties / ties.sum())


def solve_beta_projected_gradient(
    alpha: FloatArray,
    kernel: FloatArray,
    manifolds: Sequence[FloatArray],
    config: ObjectiveConfig,
    max_iters: int = 10000,
    tol: float = 0.0,
) -> SimplexWeights:
    """Iterative solution of the same problem as solve_beta, for cross-checking the closed form."""
    if not config.gamma_beta > 0:
        raise ValueError("the projected-gradient beta solver needs gamma_beta > 0")
    energies = regularizer_energies(alpha, kernel, manifolds, config.gamma_i)
    count = len(manifolds)

    def objective(beta: FloatArray) -> float:
        return float(energies @ beta) + config.gamma_beta * float(beta @ beta)

    def gradient(beta: FloatArray) -> FloatArray:
        return energies + 2.0 * config.gamma_beta * beta

    # twice the true Lipschitz constant, so the iteration does not land on the answer in one step
    beta, _ = accelerated_projected_gradient(
        objective, gradient, 4.0 * config.gamma_beta, np.full(count, 1.0 / count), max_iters, tol
    )
    return SimplexWeights(project_onto_simplex(beta))


@dataclass(frozen=True)
class AlternatingResult:
    alpha: FloatArray
    theta: SimplexWeights
    beta: SimplexWeights
    trace: Tuple[TraceEntry, ...]
    rounds: int


def alternate(
    kernels: Sequence[FloatArray],
    manifolds: Sequence[FloatArray],
    labels: FloatArray,
    n_labeled: int,
    config: ObjectiveConfig,
    learn_theta: bool = True,
    learn_beta: bool = True,
) -> AlternatingResult:
    """Block-coordinate descent over alpha, theta and beta starting from uniform weights.

    The trace holds the objective after the initialization and after every step. Closed-form steps and the
    squared-loss theta step are exact, so any increase beyond MONOTONICITY_SLACK raises
    MonotonicityViolationError. The hinge alpha and theta steps minimize smoothed surrogates and are kept only if
    they do not raise the objective.
    """
    n = kernels[0].shape[0]
    y = np.zeros(n)
    y[:n_labeled] = np.asarray(labels, dtype=np.float64)[:n_labeled]
    learn_theta = learn_theta and len(kernels) > 1
    learn_beta = learn_beta and len(manifolds) > 1 and config.gamma_i > 0
    smoothed_steps = config.loss == LossKind.HINGE

    theta = SimplexWeights.uniform(len(kernels))
    beta = SimplexWeights.uniform(len(manifolds))
    alpha = np.zeros(n)

    def objective(a: FloatArray, t: SimplexWeights, b: SimplexWeights) -> float:
        return mhr_objective(a, kernels, manifolds, t, b, y, n_labeled, config)

    def alpha_objective(kernel: FloatArray, manifold: FloatArray, penalty: float) -> Callable[[FloatArray], float]:
        def score(a: FloatArray) -> float:
            loss = data_loss(kernel @ a, y, n_labeled, config.loss)
            return loss + regularization(a, kernel, manifold, config) + penalty

        return score

    current = objective(alpha, theta, beta)
    trace = [TraceEntry(0, TraceStep.INIT, current)]

    def record(round_index: int, step: TraceStep, value: float) -> None:
        previous = trace[-1].objective
        if value > previous + MONOTONICITY_SLACK:
            raise MonotonicityViolationError(
                f"round {round_index} {step.name.lower()} step raised the objective from {previous!r} to {value!r}"
            )
        trace.append(TraceEntry(round_index, step, value))

    rounds = 0
    for rounds in range(1, config.max_outer_rounds + 1):
        round_start = current

        kernel, manifold = weighted_sum(kernels, theta), weighted_sum(manifolds, beta)
        penalty = config.gamma_theta * float(theta.weights @ theta.weights)
        penalty += config.gamma_beta * float(beta.weights @ beta.weights)
        candidate_alpha = solve_alpha(
            kernel, manifold, y, n_labeled, config, start=alpha, score=alpha_objective(kernel, manifold, penalty)
        )
        candidate = objective(candidate_alpha, theta, beta)
        if not smoothed_steps or candidate <= current:
            alpha, current = candidate_alpha, candidate
        record(rounds, TraceStep.ALPHA, current)

        if learn_theta:
            candidate_theta = solve_theta(alpha, kernels, manifold, y, n_labeled, config, theta)
            candidate = objective(alpha, candidate_theta, beta)
            if not smoothed_steps or candidate <= current:
                theta, current = candidate_theta, candidate
            record(rounds, TraceStep.THETA, current)

        if learn_beta:
            beta = solve_beta(alpha, weighted_sum(kernels, theta), manifolds, config)
            current = objective(alpha, theta, beta)
            record(rounds, TraceStep.BETA, current)

        logger.info(f"Round {rounds}: objective={current:.8g} theta={np.round(theta.weights, 4)}")
        if not (learn_theta or learn_beta):
            break
        if round_start - current < config.tol_outer * max(abs(round_start), np.finfo(float).tiny):
            break

    return AlternatingResult(alpha=alpha, theta=theta, beta=beta, trace=tuple(trace), rounds=rounds)


def views_fingerprint(view_names: Sequence[str], views: Sequence[FloatArray]) -> bytes:
    """SHA-256 over view names, shapes and little-endian feature bytes."""
    digest = hashlib.sha256()
    for name, view in zip(view_names, views):
        digest.update(name.encode())
        digest.update(np.asarray(view.shape, dtype="<i8").tobytes())
        digest.update(np.ascontiguousarray(view, dtype="<f8").tobytes())
    return digest.digest()


@dataclass(frozen=True)
class TrainedModel:
    """Expansion coefficients over the training examples plus everything needed to evaluate the classifier."""

    alpha: FloatArray
    theta: SimplexWeights
    beta: SimplexWeights
    objective_trace: Tuple[TraceEntry, ...]
    config: ObjectiveConfig
    kernel_specs: Tuple[KernelSpec, ...]
    view_names: Tuple[str, ...]
    train_views: Tuple[FloatArray, ...]
    manifold_kind: ManifoldKind
    n_labeled: int
    class_name: str = "label"
    learn_theta: bool = True
    learn_beta: bool = True
    concatenated: bool = False
    scaler: Optional[ViewScaler] = None

    @property
    def n(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def fingerprint(self) -> bytes:
        return views_fingerprint(self.view_names, self.train_views)

    @property
    def outer_rounds(self) -> int:
        return max((entry.round for entry in self.objective_trace), default=0)

    def prepare_views(self, views: Sequence[FloatArray]) -> List[FloatArray]:
        """Concatenate and standardize raw views the way the training views were."""
        prepared = [np.asarray(v, dtype=np.float64) for v in views]
        if self.concatenated and len(prepared) > 1:
            prepared = [np.hstack(prepared)]
        if self.scaler is not None:
            prepared = self.scaler.transform(prepared)
        return prepared


def predict(
    model: TrainedModel, test_views: Sequence[FloatArray], train_views: Optional[Sequence[FloatArray]] = None
) -> FloatArray:
    """Scores sum_i alpha_i sum_k theta_k K_k(x_i, x) for every test example; the sign is the class.

    `test_views` are raw feature matrices. When `train_views` are given they must be the model's own training
    views.
    """
    if train_views is not None and views_fingerprint(model.view_names, train_views) != model.fingerprint:
        raise FingerprintMismatchError("training views do not match the model's fingerprint")

    prepared = model.prepare_views(test_views)
    if len(prepared) != len(model.view_names):
        raise ValueError(f"model has {len(model.view_names)} views, got {len(prepared)}")
    for name, view, train in zip(model.view_names, prepared, model.train_views):
        if view.ndim != 2 or view.shape[1] != train.shape[1]:
            raise ValueError(f"view {name}: expected width {train.shape[1]}, got {view.shape[-1]}")

    scores = np.zeros(prepared[0].shape[0])
    for weight, view, train, spec in zip(model.theta, prepared, model.train_views, model.kernel_specs):
        if weight != 0.0:
            scores += weight * (cross_gram(view, train, spec) @ model.alpha)
    return scores


def task_targets(dataset: MultiviewDataset, class_name: Optional[str]) -> Tuple[str, FloatArray]:
    name = class_name or dataset.class_names[0]
    labels = dataset.task(name).astype(np.float64)
    present = set(labels[: dataset.n_labeled].tolist())
    if {float(Label.POSITIVE), float(Label.NEGATIVE)} - present:
        raise ValueError(f"class {name}: need at least one labeled example of each class, have {sorted(present)}")
    return name, labels


def fit_alternating(
    dataset: MultiviewDataset,
    kernel_specs: Sequence[KernelSpec],
    manifold_kind: ManifoldKind,
    config: ObjectiveConfig,
    settings: ManifoldSettings = ManifoldSettings(),
    class_name: Optional[str] = None,
    learn_theta: bool = True,
    learn_beta: bool = True,
    bank: Optional[ViewBank] = None,
    scaler: Optional[ViewScaler] = None,
    concatenated: bool = False,
    workers: int = 1,
) -> TrainedModel:
    """Train one binary classifier on a dataset whose labeled examples come first."""
    name, labels = task_targets(dataset, class_name)
    if bank is None:
        bank = ViewBank.from_dataset(dataset, kernel_specs, settings, workers=workers)
    if bank.n != dataset.n_examples:
        raise ValueError(f"view bank holds {bank.n} examples, dataset has {dataset.n_examples}")

    kernels: List[GramKernel] = bank.kernels()
    manifolds: List[ManifoldMatrix] = bank.manifolds(manifold_kind)
    logger.info(
        f"Fitting {name}: n={dataset.n_examples} l={dataset.n_labeled} views={len(kernels)} "
        f"loss={config.loss.name.lower()} manifold={manifold_kind.name.lower()}"
    )
    result = alternate(
        [k.matrix for k in kernels],
        [m.matrix for m in manifolds],
        labels,
        dataset.n_labeled,
        config,
        learn_theta=learn_theta,
        learn_beta=learn_beta,
    )
    return TrainedModel(
        alpha=result.alpha,
        theta=result.theta,
        beta=result.beta,
        objective_trace=result.trace,
        config=config,
        kernel_specs=bank.kernel_specs,
        view_names=bank.view_names,
        train_views=bank.views,
        manifold_kind=manifold_kind,
        n_labeled=dataset.n_labeled,
        class_name=name,
        learn_theta=learn_theta,
        learn_beta=learn_beta,
        concatenated=concatenated,
        scaler=scaler,
    )

