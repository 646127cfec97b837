import csv
import itertools
import pathlib
from typing import Callable, Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from mhrlearn.dataset import FloatArray, MultiviewDataset


def random_psd(rng: np.random.Generator, n: int, rank: Optional[int] = None) -> FloatArray:
    """A symmetric PSD matrix A A^T, rank-deficient when `rank` < n."""
    factor = rng.standard_normal((n, rank or n))
    matrix = factor @ factor.T
    return (matrix + matrix.T) / 2.0


def random_simplex(rng: np.random.Generator, size: int) -> FloatArray:
    weights = rng.uniform(0.05, 1.0, size=size)
    return weights / weights.sum()


def write_dataset_dir(
    root: pathlib.Path,
    views: Dict[str, Sequence[Sequence[float]]],
    labels: Sequence[Sequence[int]],
    class_names: Sequence[str] = ("label",),
) -> pathlib.Path:
    """Write the canonical CSV layout by hand, one `view_<name>.csv` per view."""
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "labels.csv", "w", newline="") as labels_file:
        writer = csv.writer(labels_file)
        writer.writerow(["index", *class_names])
        for index, row in enumerate(labels):
            writer.writerow([index, *row])
    for name, rows in views.items():
        with open(root / f"view_{name}.csv", "w", newline="") as view_file:
            writer = csv.writer(view_file)
            writer.writerow([f"f{j}" for j in range(len(rows[0]))])
            for row in rows:
                writer.writerow([repr(float(v)) for v in row])
    return root


def small_dataset(seed: int = 0, n: int = 24, n_labeled: int = 8, widths: Sequence[int] = (3, 2)) -> MultiviewDataset:
    """Random views with a balanced labeled block followed by unlabeled examples."""
    rng = np.random.default_rng(seed)
    views = [rng.standard_normal((n, width)) for width in widths]
    labels = np.zeros(n, dtype=np.int8)
    labels[:n_labeled] = np.where(np.arange(n_labeled) % 2 == 0, 1, -1)
    return MultiviewDataset.build(views, [f"v{i}" for i in range(len(widths))], labels)


def brute_force_knn(points: FloatArray, k: int) -> np.ndarray:
    """Every pair's distance, sorted with ties going to the lower index."""
    n = points.shape[0]
    neighbors = np.zeros((n, k), dtype=np.int64)
    for i in range(n):
        candidates = [(float(np.sum((points[i] - points[j]) ** 2)), j) for j in range(n) if j != i]
        neighbors[i] = [j for _, j in sorted(candidates)[:k]]
    return neighbors


def simplex_grid(size: int, resolution: float) -> Iterator[FloatArray]:
    """Every point of the probability simplex in R^size whose coordinates are multiples of `resolution`."""
    steps = int(round(1.0 / resolution))
    for head in itertools.product(range(steps + 1), repeat=size - 1):
        remainder = steps - sum(head)
        if remainder >= 0:
            yield np.array([*head, remainder], dtype=np.float64) / steps


def grid_minimum(objective: Callable[[FloatArray], float], size: int, resolution: float) -> Tuple[FloatArray, float]:
    best_point, best_value = None, np.inf
    for point in simplex_grid(size, resolution):
        value = objective(point)
        if value < best_value:
            best_point, best_value = point, value
    assert best_point is not None
    return best_point, best_value


def finite_difference_gradient(
    function: Callable[[FloatArray], float], point: FloatArray, step: float = 1e-6
) -> FloatArray:
    gradient = np.zeros_like(point)
    for i in range(point.shape[0]):
        offset = np.zeros_like(point)
        offset[i] = step
        gradient[i] = (function(point + offset) - function(point - offset)) / (2.0 * step)
    return gradient
