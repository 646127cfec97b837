from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from mhrlearn.dataset import FloatArray
from mhrlearn.kernels import SimplexWeights, weighted_sum

DEFAULT_GAMMA_A = 1e-3
DEFAULT_GAMMA_I = 1e-3
DEFAULT_GAMMA_THETA = 1e-2
DEFAULT_GAMMA_BETA = 1e-2
DEFAULT_MU = 0.01


class LossKind(IntEnum):
    SQUARED = 0
    HINGE = 1

    @classmethod
    def from_name(cls, name: str) -> "LossKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown loss {name}, expected hinge or squared")


@dataclass(frozen=True)
class ObjectiveConfig:
    """Weights of the multiview objective and the stopping rules of its solvers."""

    gamma_a: float = DEFAULT_GAMMA_A
    gamma_i: float = DEFAULT_GAMMA_I
    gamma_theta: float = DEFAULT_GAMMA_THETA
    gamma_beta: float = DEFAULT_GAMMA_BETA
    loss: LossKind = LossKind.SQUARED
    mu: float = DEFAULT_MU
    max_inner_iters: int = 1000
    max_outer_rounds: int = 50
    tol_inner: float = 1e-6
    tol_outer: float = 1e-5

    def __post_init__(self) -> None:
        for name in ("gamma_a", "gamma_i", "gamma_theta", "gamma_beta"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be a finite value >= 0, got {value}")
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not (self.tol_inner > 0 and self.tol_outer > 0):
            raise ValueError("tolerances must be > 0")
        if self.max_inner_iters < 1 or self.max_outer_rounds < 1:
            raise ValueError("iteration caps must be >= 1")


def labeled_row_scales(kernel: FloatArray, n_labeled: int) -> FloatArray:
    """Infinity norm of every labeled kernel row."""
    return np.abs(kernel[:n_labeled]).max(axis=1)


def margins(f: FloatArray, y: FloatArray, n_labeled: int) -> FloatArray:
    """1 - y_i f_i for the labeled examples."""
    return 1.0 - y[:n_labeled] * f[:n_labeled]


def smoothed_hinge_u(margin: FloatArray, scales: FloatArray, mu: float) -> FloatArray:
    """Maximizer over [0, 1] of the smoothed hinge's dual: median{0, 1, margin / (mu * scale)}."""
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    scales = np.asarray(scales, dtype=np.float64)
    if (scales <= 0).any():
        raise ValueError(f"zero kernel row scale at labeled example {int(np.flatnonzero(scales <= 0)[0])}")
    return np.clip(np.asarray(margin, dtype=np.float64) / (mu * scales), 0.0, 1.0)


def smoothed_hinge(margin: FloatArray, scales: FloatArray, mu: float) -> FloatArray:
    """Per-example smoothed hinge: 0, margin^2 / (2 mu s) or margin - mu s / 2 depending on the region."""
    u = smoothed_hinge_u(margin, scales, mu)
    return u * margin - 0.5 * mu * scales * u**2


def hinge(margin: FloatArray) -> FloatArray:
    return np.maximum(margin, 0.0)


def data_loss(f: FloatArray, y: FloatArray, n_labeled: int, loss: LossKind) -> float:
    """Mean loss over the labeled examples (true hinge, not smoothed)."""
    if loss == LossKind.HINGE:
        return float(hinge(margins(f, y, n_labeled)).mean())
    return float(((y[:n_labeled] - f[:n_labeled]) ** 2).mean())


def regularization(alpha: FloatArray, kernel: FloatArray, manifold: FloatArray, config: ObjectiveConfig) -> float:
    """gamma_A * alpha^T K alpha + gamma_I * f^T M f with f = K alpha."""
    f = kernel @ alpha
    return float(config.gamma_a * (alpha @ f) + config.gamma_i * (f @ manifold @ f))


def kls_objective(
    alpha: FloatArray, kernel: FloatArray, manifold: FloatArray, y: FloatArray, n_labeled: int, config: ObjectiveConfig
) -> float:
    """Squared-loss objective for fixed kernel and regularizer, minimized by fit_kls."""
    return data_loss(kernel @ alpha, y, n_labeled, LossKind.SQUARED) + regularization(alpha, kernel, manifold, config)


def smoothed_objective(
    alpha: FloatArray, kernel: FloatArray, manifold: FloatArray, y: FloatArray, n_labeled: int, config: ObjectiveConfig
) -> float:
    """F_mu: the smoothed-hinge objective minimized by the accelerated SVM solver."""
    scales = labeled_row_scales(kernel, n_labeled)
    loss = smoothed_hinge(margins(kernel @ alpha, y, n_labeled), scales, config.mu).mean()
    return float(loss) + regularization(alpha, kernel, manifold, config)


def mhr_objective(
    alpha: FloatArray,
    kernels: Sequence[FloatArray],
    manifolds: Sequence[FloatArray],
    theta: SimplexWeights,
    beta: SimplexWeights,
    y: FloatArray,
    n_labeled: int,
    config: ObjectiveConfig,
) -> float:
    """The complete multiview objective.

    loss + gamma_A ||f||_K^2 + gamma_I f^T H f + gamma_theta ||theta||^2 + gamma_beta ||beta||^2
    """
    kernel = weighted_sum(kernels, theta)
    manifold = weighted_sum(manifolds, beta)
    f = kernel @ alpha
    value = data_loss(f, y, n_labeled, config.loss) + regularization(alpha, kernel, manifold, config)
    value += config.gamma_theta * float(theta.weights @ theta.weights)
    value += config.gamma_beta * float(beta.weights @ beta.weights)
    return value
