from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import eigvalsh

from mhrlearn.dataset import FloatArray
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.solvers.objective import (
    ObjectiveConfig,
    labeled_row_scales,
    margins,
    smoothed_hinge_u,
    smoothed_objective,
)

logger = mhrlearn_logger.getChild(__file__)


class NonFiniteObjectiveError(Exception):
    """Raised when a solver produces a NaN or infinite objective, which points to mis-scaled inputs."""


@dataclass(frozen=True)
class SmoothedHingeState:
    """Dual variables of the smoothed hinge at one iterate, and the per-example scales they were computed with."""

    u: FloatArray
    scales: FloatArray

    @classmethod
    def at(
        cls, alpha: FloatArray, kernel: FloatArray, y: FloatArray, n_labeled: int, mu: float
    ) -> "SmoothedHingeState":
        scales = labeled_row_scales(kernel, n_labeled)
        return cls(u=smoothed_hinge_u(margins(kernel @ alpha, y, n_labeled), scales, mu), scales=scales)


def regularizer_operator(kernel: FloatArray, manifold: FloatArray, config: ObjectiveConfig) -> FloatArray:
    """gamma_A K + gamma_I K M K, half the Hessian of the regularization terms."""
    return config.gamma_a * kernel + config.gamma_i * (kernel @ manifold @ kernel)


def svm_gradient(
    alpha: FloatArray,
    kernel: FloatArray,
    manifold: FloatArray,
    u: FloatArray,
    y: FloatArray,
    n_labeled: int,
    config: ObjectiveConfig,
) -> FloatArray:
    """Gradient of F_mu: 2 (gamma_A K + gamma_I K M K) alpha - (1/l) (Y K_l)^T u."""
    regularizer = 2.0 * (config.gamma_a * (kernel @ alpha) + config.gamma_i * (kernel @ (manifold @ (kernel @ alpha))))
    loss = (y[:n_labeled] * u) @ kernel[:n_labeled] / n_labeled
    return regularizer - loss


def svm_lipschitz(kernel: FloatArray, manifold: FloatArray, config: ObjectiveConfig, n_labeled: int = 0) -> float:
    """Lipschitz constant of the gradient of F_mu.

    The loss term is (1/mu) max_i ||K_i||_2^2 / ||K_i||_inf over the labeled rows (every row when `n_labeled`
    is 0).
    """
    operator = 2.0 * regularizer_operator(kernel, manifold, config)
    eigenvalues = eigvalsh((operator + operator.T) / 2.0)
    spectral = float(np.abs(eigenvalues).max())

    rows = kernel[:n_labeled] if n_labeled else kernel
    scales = np.abs(rows).max(axis=1)
    nonzero = scales > 0
    row_term = float(((rows[nonzero] ** 2).sum(axis=1) / scales[nonzero]).max()) if nonzero.any() else 0.0
    return spectral + row_term / config.mu


def fit_svm_nesterov(
    kernel: FloatArray,
    manifold: FloatArray,
    labels: FloatArray,
    n_labeled: int,
    config: ObjectiveConfig,
    trace: Optional[List[float]] = None,
    start: Optional[FloatArray] = None,
    score: Optional[Callable[[FloatArray], float]] = None,
) -> FloatArray:
    """Minimize the smoothed-hinge objective with Nesterov's three-sequence scheme.

    The iteration starts at `start` (alpha = 0 when omitted), which is also the guess point of the dual-averaging
    sequence. Returns the iterate with the lowest `score` seen, the start included; `score` defaults to the
    smoothed objective. When `trace` is given, the smoothed objective of every gradient-step iterate is appended
    to it.
    """
    n = kernel.shape[0]
    if manifold.shape != (n, n):
        raise ValueError(f"kernel is {n}x{n} but the regularizer is {manifold.shape}")
    if not 1 <= n_labeled <= n:
        raise ValueError(f"need between 1 and {n} labeled examples, got {n_labeled}")
    y = np.zeros(n)
    y[:n_labeled] = np.asarray(labels, dtype=np.float64)[:n_labeled]

    lipschitz = svm_lipschitz(kernel, manifold, config, n_labeled)
    scales = labeled_row_scales(kernel, n_labeled)

    def objective(alpha: FloatArray) -> float:
        value = smoothed_objective(alpha, kernel, manifold, y, n_labeled, config)
        if not np.isfinite(value):
            raise NonFiniteObjectiveError(f"smoothed objective became {value}")
        return value

    def gradient(alpha: FloatArray) -> FloatArray:
        u = smoothed_hinge_u(margins(kernel @ alpha, y, n_labeled), scales, config.mu)
        return svm_gradient(alpha, kernel, manifold, u, y, n_labeled, config)

    guess = np.zeros(n) if start is None else np.array(start, dtype=np.float64)
    if guess.shape != (n,):
        raise ValueError(f"starting point has shape {guess.shape}, expected ({n},)")
    score = score or objective

    alpha = guess.copy()
    weighted_gradients = np.zeros(n)
    previous_value = objective(alpha)
    best, best_score = alpha, previous_value if score is objective else score(alpha)

    iteration = 0
    for iteration in range(config.max_inner_iters):
        step_gradient = gradient(alpha)
        gradient_step = alpha - step_gradient / lipschitz
        weighted_gradients += (iteration + 1) / 2 * step_gradient
        dual_average = guess - weighted_gradients / lipschitz
        alpha = (2.0 / (iteration + 3)) * dual_average + ((iteration + 1) / (iteration + 3)) * gradient_step

        value = objective(gradient_step)
        if trace is not None:
            trace.append(value)
        candidate_score = value if score is objective else score(gradient_step)
        if candidate_score < best_score:
            best, best_score = gradient_step, candidate_score
        if abs(previous_value - value) <= config.tol_inner * max(abs(previous_value), np.finfo(float).tiny):
            break
        previous_value = value
    else:
        logger.warning(f"Nesterov solver hit its iteration cap ({config.max_inner_iters}), best={best_score:.6g}")

    logger.debug(f"Nesterov solver: {iteration + 1} iterations, L={lipschitz:.4g}, best={best_score:.6g}")
    return best
