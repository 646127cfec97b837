from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from mhrlearn.dataset import FloatArray

# Recall thresholds 0.0, 0.1, ..., 1.0 are handled as tenths so no float comparison is involved
RECALL_STEPS = 10


class UndefinedAveragePrecisionError(Exception):
    """Raised when AP is requested for a ranking without a single positive example."""


@dataclass(frozen=True)
class RankedPredictions:
    """Scores and binary ground truth; ties in score rank the lower index first."""

    scores: FloatArray
    truth: npt.NDArray[np.bool_]

    def __post_init__(self) -> None:
        if self.scores.shape != self.truth.shape or self.scores.ndim != 1:
            raise ValueError(f"scores {self.scores.shape} and truth {self.truth.shape} must be equal-length vectors")

    @classmethod
    def from_labels(cls, scores: npt.ArrayLike, labels: npt.ArrayLike) -> "RankedPredictions":
        """Build from +1/-1 (or 1/0) labels; anything > 0 is positive."""
        return cls(scores=np.asarray(scores, dtype=np.float64), truth=np.asarray(labels) > 0)

    def ranking(self) -> npt.NDArray[np.int64]:
        """Example indices by descending score, ascending index among equal scores."""
        return np.lexsort((np.arange(self.scores.size), -self.scores))


def average_precision(preds: RankedPredictions) -> float:
    """11-point interpolated average precision.

    At each recall threshold t in {0, 0.1, ..., 1} take the best precision over all ranks reaching recall >= t,
    then average the eleven values.
    """
    positives = int(preds.truth.sum())
    if positives == 0:
        raise UndefinedAveragePrecisionError("average precision needs at least one positive example")

    hits = preds.truth[preds.ranking()]
    true_positives = np.cumsum(hits)
    precision = true_positives / np.arange(1, hits.size + 1)

    total = 0.0
    for step in range(RECALL_STEPS + 1):
        reached = true_positives * RECALL_STEPS >= step * positives
        total += float(precision[reached].max())
    return total / (RECALL_STEPS + 1)


def mean_ap(aps: Sequence[float]) -> float:
    if len(aps) == 0:
        raise ValueError("mean AP of an empty list")
    return float(np.mean(np.asarray(aps, dtype=np.float64)))
