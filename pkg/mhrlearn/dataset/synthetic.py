from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np
from sklearn.datasets import make_moons

from mhrlearn.dataset.multiview_dataset import FloatArray, MultiviewDataset
from mhrlearn.logger import mhrlearn_logger

logger = mhrlearn_logger.getChild(__file__)


class UnknownGeneratorError(Exception):
    """Raised when a generator spec names no registered generator."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of a synthetic dataset.

    `m` and `d` are only read by `linear_manifold`, and `d` also by `noisy_redundant`.
    """

    name: str
    n: int
    noise: float = 0.1
    seed: int = 0
    m: int = 2
    d: int = 5

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError(f"generator needs a positive n, got {self.n}")
        if self.noise < 0:
            raise ValueError(f"noise level must be nonnegative, got {self.noise}")
        if self.m < 1 or self.d < 1:
            raise ValueError(f"dimensions must be positive, got m={self.m} d={self.d}")


def _rotation(angle: float) -> FloatArray:
    return np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])


def two_moons_views(spec: GeneratorSpec) -> MultiviewDataset:
    """Two noisy nonlinear 2-D views of the same interleaved half-moons."""
    clean, classes = make_moons(n_samples=spec.n, noise=0.0, random_state=spec.seed)
    rng = np.random.default_rng(spec.seed)

    first = clean + spec.noise * rng.standard_normal(clean.shape)
    rotated = clean @ _rotation(np.pi / 3).T
    warped = np.column_stack([rotated[:, 0] + 0.5 * np.sin(2.0 * rotated[:, 1]), rotated[:, 1]])
    second = warped + spec.noise * rng.standard_normal(clean.shape)

    labels = np.where(classes == 1, 1, -1)
    return MultiviewDataset.build(
        [first, second], ["moons_a", "moons_b"], labels, view_columns=[("x", "y"), ("x", "y")], latent=clean
    )


def linear_manifold(spec: GeneratorSpec) -> MultiviewDataset:
    """Points of an m-dimensional affine subspace of R^d; labels split the first latent coordinate at its median."""
    if spec.m > spec.d:
        raise ValueError(f"intrinsic dimension {spec.m} exceeds ambient dimension {spec.d}")
    rng = np.random.default_rng(spec.seed)

    latent = rng.uniform(0.0, 1.0, size=(spec.n, spec.m))
    basis, _ = np.linalg.qr(rng.standard_normal((spec.d, spec.m)))
    offset = rng.standard_normal(spec.d)
    ambient = latent @ basis.T + offset + spec.noise * rng.standard_normal((spec.n, spec.d))

    labels = np.where(latent[:, 0] >= np.median(latent[:, 0]), 1, -1)
    return MultiviewDataset.build([ambient], ["ambient"], labels, latent=latent)


def noisy_redundant(spec: GeneratorSpec) -> MultiviewDataset:
    """One view whose first feature separates the classes and one view of independent Gaussian noise."""
    rng = np.random.default_rng(spec.seed)
    n_positive = (spec.n + 1) // 2
    n_negative = spec.n // 2
    signs = np.concatenate([np.ones(n_positive), -np.ones(n_negative)])

    margin = 0.5 + rng.uniform(0.0, 2.0, size=spec.n)
    informative = np.column_stack([signs * margin, (1.0 + spec.noise) * rng.standard_normal(spec.n)])

    noise = rng.standard_normal((spec.n, spec.d))

    order = rng.permutation(spec.n)
    return MultiviewDataset.build(
        [informative[order], noise[order]],
        ["informative", "noise"],
        signs[order].astype(np.int8),
        latent=margin[order] * signs[order],
    )


GENERATORS: Dict[str, Callable[[GeneratorSpec], MultiviewDataset]] = {
    "two_moons_views": two_moons_views,
    "linear_manifold": linear_manifold,
    "noisy_redundant": noisy_redundant,
}


def make_synthetic(spec: GeneratorSpec) -> MultiviewDataset:
    """Generate a fully labeled dataset; masking happens separately through split_labels."""
    generator = GENERATORS.get(spec.name)
    if generator is None:
        raise UnknownGeneratorError(f"unknown generator {spec.name}, expected one of {sorted(GENERATORS)}")
    logger.debug(f"Generating {spec}")
    return generator(spec)
