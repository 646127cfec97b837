import warnings
from typing import Tuple

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from mhrlearn.dataset import FloatArray, IntArray
from mhrlearn.logger import mhrlearn_logger
from mhrlearn.solvers.objective import ObjectiveConfig

logger = mhrlearn_logger.getChild(__file__)

# Systems whose 1-norm condition estimate exceeds this are treated as singular
MAX_CONDITION = 1e14


class SingularSystemError(Exception):
    """Raised when the least-squares system is numerically singular; raising gamma_A usually helps."""

    def __init__(self, condition: float) -> None:
        super().__init__(f"singular least-squares system (condition estimate {condition:.3e}), try a larger gamma_A")
        self.condition = condition


def kls_system(kernel: FloatArray, manifold: FloatArray, n_labeled: int, config: ObjectiveConfig) -> FloatArray:
    """J K + gamma_A l I + gamma_I l M K, with J selecting the first l examples."""
    n = kernel.shape[0]
    system = config.gamma_i * n_labeled * (manifold @ kernel)
    system[:n_labeled] += kernel[:n_labeled]
    system[np.diag_indices(n)] += config.gamma_a * n_labeled
    return system


def condition_estimate(system: FloatArray, factors: Tuple[FloatArray, IntArray]) -> float:
    """1-norm condition number of `system` estimated from its LU factors, without forming the inverse."""
    lu, _ = factors
    norm = float(np.abs(system).sum(axis=0).max())
    reciprocal, info = dgecon(lu, norm, norm="1")
    if info != 0 or not reciprocal > 0:
        return float("inf")
    return 1.0 / float(reciprocal)


def fit_kls(
    kernel: FloatArray, manifold: FloatArray, labels: FloatArray, n_labeled: int, config: ObjectiveConfig
) -> FloatArray:
    """Closed-form expansion coefficients of the regularized least-squares classifier.

    `labels` holds the targets of the first `n_labeled` examples; the rest of the vector is ignored, so
    real-valued targets work as well as +1/-1.
    """
    n = kernel.shape[0]
    if manifold.shape != (n, n):
        raise ValueError(f"kernel is {n}x{n} but the regularizer is {manifold.shape}")
    if not 1 <= n_labeled <= n:
        raise ValueError(f"need between 1 and {n} labeled examples, got {n_labeled}")

    targets = np.zeros(n)
    targets[:n_labeled] = np.asarray(labels, dtype=np.float64)[:n_labeled]
    system = kls_system(kernel, manifold, n_labeled, config)

    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            factors = lu_factor(system)
        except (LinAlgWarning, ValueError, np.linalg.LinAlgError):
            raise SingularSystemError(float("inf"))
    condition = condition_estimate(system, factors)
    if condition > MAX_CONDITION:
        raise SingularSystemError(condition)

    alpha = lu_solve(factors, targets)
    logger.debug(f"KLS solve: n={n} l={n_labeled} condition={condition:.3e}")
    return alpha
