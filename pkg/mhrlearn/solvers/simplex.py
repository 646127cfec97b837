from typing import Callable, Optional, Tuple

import numpy as np
import numpy.typing as npt

from mhrlearn.dataset import FloatArray
from mhrlearn.kernels import SimplexWeights


def project_onto_simplex(v: npt.ArrayLike) -> FloatArray:
    """Euclidean projection onto {w >= 0, sum w = 1}, by sorting and a cumulative-sum threshold."""
    values = np.asarray(v, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("cannot project an empty vector onto the simplex")
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot project a non-finite vector onto the simplex")

    descending = np.sort(values)[::-1]
    cumulative = np.cumsum(descending) - 1.0
    positions = np.arange(1, values.size + 1)
    rho = np.flatnonzero(descending - cumulative / positions > 0)[-1]
    threshold = cumulative[rho] / (rho + 1.0)
    projected = np.maximum(values - threshold, 0.0)
    # absorb the last ulp of rounding into the largest entry
    projected[np.argmax(projected)] += 1.0 - projected.sum()
    return projected


def project_simplex(v: npt.ArrayLike) -> SimplexWeights:
    return SimplexWeights(project_onto_simplex(v))


def accelerated_projected_gradient(
    objective: Callable[[FloatArray], float],
    gradient: Callable[[FloatArray], FloatArray],
    lipschitz: float,
    start: FloatArray,
    max_iters: int,
    tol: float,
    score: Optional[Callable[[FloatArray], float]] = None,
) -> Tuple[FloatArray, int]:
    """FISTA over the simplex with function-value restarts.

    Stops once an accepted step changes `objective` by no more than `tol` relative to its value, so `tol = 0` runs
    until the objective stops changing. Returns the iterate with the lowest `score` (defaults to `objective`), the
    starting point included, and the number of iterations run.
    """
    score = score or objective
    step = 1.0 / lipschitz if lipschitz > 0 else 1.0

    current = project_onto_simplex(start)
    extrapolated = current.copy()
    momentum = 1.0
    current_value = objective(current)
    best, best_score = current, score(current)

    iteration = 0
    for iteration in range(1, max_iters + 1):
        candidate = project_onto_simplex(extrapolated - step * gradient(extrapolated))
        candidate_value = objective(candidate)
        next_momentum = (1.0 + np.sqrt(1.0 + 4.0 * momentum**2)) / 2.0
        restarted = candidate_value > current_value
        if restarted:
            # restart the momentum from the last accepted point
            extrapolated = candidate
            next_momentum = 1.0
        else:
            extrapolated = candidate + ((momentum - 1.0) / next_momentum) * (candidate - current)

        change = abs(current_value - candidate_value)
        threshold = tol * max(abs(current_value), np.finfo(float).tiny)
        current, current_value, momentum = candidate, candidate_value, next_momentum

        candidate_score = score(current) if score is not objective else current_value
        if candidate_score < best_score:
            best, best_score = current, candidate_score
        if not restarted and change <= threshold:
            break

    return best, iteration
