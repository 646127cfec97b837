import numpy as np
import pytest

from mhrlearn.dataset import GeneratorSpec, make_synthetic
from mhrlearn.kernels import SimplexWeights, check_psd
from mhrlearn.manifold import (
    ManifoldKind,
    ManifoldMatrix,
    ManifoldSettings,
    NeighborCountError,
    build_manifold,
    combine_manifolds,
    default_neighbor_count,
    estimate_intrinsic_dim,
    hessian_energy,
    knn,
    laplacian,
    local_design_matrix,
    minimum_neighbor_count,
    modified_gram_schmidt,
)
from tests.utils import brute_force_knn, random_psd, random_simplex


class TestNeighbors:
    def test_nearest_on_a_line(self) -> None:
        # Given 1-D points {0, 1, 10} and k = 1
        graph = knn(np.array([[0.0], [1.0], [10.0]]), 1)
        # Then each point's nearest neighbor is (1, 0, 1)
        assert graph.indices[:, 0].tolist() == [1, 0, 1]
        assert graph.distances[:, 0].tolist() == [1.0, 1.0, 9.0]

    def test_all_others_when_k_is_n_minus_one(self) -> None:
        points = np.random.default_rng(0).standard_normal((6, 2))
        graph = knn(points, 5)
        for i in range(6):
            assert sorted(graph.indices[i].tolist()) == [j for j in range(6) if j != i]

    def test_matches_brute_force(self) -> None:
        points = np.random.default_rng(1).standard_normal((50, 3))
        assert np.array_equal(knn(points, 5).indices, brute_force_knn(points, 5))

    def test_ties_go_to_lower_index(self) -> None:
        graph = knn(np.array([[0.0], [1.0], [-1.0]]), 2)
        assert graph.indices[0].tolist() == [1, 2]

    def test_blocks_and_workers_agree(self) -> None:
        points = np.random.default_rng(2).standard_normal((1100, 2))
        assert np.array_equal(knn(points, 4).indices, knn(points, 4, workers=3).indices)

    def test_invalid_k(self) -> None:
        with pytest.raises(NeighborCountError):
            knn(np.zeros((3, 1)), 3)
        with pytest.raises(NeighborCountError):
            knn(np.zeros((3, 1)), 0)

    def test_default_neighbor_count(self) -> None:
        assert default_neighbor_count(1000) == 100
        assert default_neighbor_count(30) == 29


class TestLaplacian:
    def test_two_points(self) -> None:
        # Given a single edge of weight w = exp(-1/2)
        view = np.array([[0.0], [1.0]])
        lap = laplacian(view, knn(view, 1), bandwidth=1.0)
        w = np.exp(-0.5)
        # Then L = [[w, -w], [-w, w]] and (1, -1) has energy 4w
        assert np.allclose(lap.matrix, [[w, -w], [-w, w]])
        assert lap.energy(np.array([1.0, -1.0])) == pytest.approx(4 * w)

    def test_constants_in_nullspace(self) -> None:
        view = np.random.default_rng(3).standard_normal((20, 2))
        lap = laplacian(view, knn(view, 4))
        assert abs(lap.energy(np.full(20, 3.0))) < 1e-12

    def test_psd_with_zero_row_sums(self) -> None:
        view = np.random.default_rng(4).standard_normal((20, 3))
        lap = laplacian(view, knn(view, 5))
        assert check_psd(lap.matrix)[0]
        assert np.allclose(lap.matrix.sum(axis=1), 0.0, atol=1e-12)
        assert np.array_equal(lap.matrix, lap.matrix.T)
        assert lap.kind == ManifoldKind.LAPLACIAN


class TestHessianEnergy:
    def setup_method(self) -> None:
        self.dataset = make_synthetic(GeneratorSpec("linear_manifold", n=150, noise=0.0, m=2, d=5, seed=4))
        self.view = self.dataset.views[0]
        self.graph = knn(self.view, 20)
        self.hessian = hessian_energy(self.view, self.graph, 2)
        self.lap = laplacian(self.view, self.graph)
        assert self.dataset.latent is not None
        self.latent = self.dataset.latent

    def test_constant_energy_vanishes(self) -> None:
        norm = np.linalg.norm(self.hessian.matrix, 2)
        assert abs(self.hessian.energy(np.full(150, 2.5))) <= 1e-9 * norm

    def test_linear_functions_in_nullspace(self) -> None:
        # Given linear functions of the latent coordinates on noise-free affine data
        rng = np.random.default_rng(5)
        for _ in range(5):
            f = self.latent @ rng.standard_normal(2) + rng.standard_normal()
            # Then the Hessian energy vanishes where the Laplacian energy does not
            assert self.hessian.energy(f) <= 1e-6 * self.lap.energy(f) + 1e-12
            assert self.lap.energy(f) > 0

    def test_quadratic_functions_have_energy(self) -> None:
        f = (self.latent**2).sum(axis=1)
        assert self.hessian.energy(f) > 1e-6

    def test_psd_and_symmetric(self) -> None:
        assert np.array_equal(self.hessian.matrix, self.hessian.matrix.T)
        assert check_psd(self.hessian.matrix)[0]
        assert self.hessian.intrinsic_dim == 2

    def test_translation_invariant(self) -> None:
        shifted = self.view + np.array([3.0, -1.5, 0.25, 7.0, -4.0])
        moved = hessian_energy(shifted, knn(shifted, 20), 2)
        scale = np.abs(self.hessian.matrix).max()
        assert np.allclose(moved.matrix, self.hessian.matrix, rtol=0.0, atol=1e-8 * scale)

    def test_workers_agree(self) -> None:
        parallel = hessian_energy(self.view, self.graph, 2, workers=3)
        assert np.allclose(parallel.matrix, self.hessian.matrix, atol=1e-10)

    def test_local_support(self) -> None:
        # entries between examples that never share a neighborhood stay exactly zero
        members = [set(row.tolist()) for row in self.graph.indices]
        i, j = next(
            (i, j)
            for i in range(150)
            for j in range(i + 1, 150)
            if not any(i in s and j in s for s in members)
        )
        assert self.hessian.matrix[i, j] == 0.0

    def test_k_too_small(self) -> None:
        assert minimum_neighbor_count(2) == 6
        with pytest.raises(NeighborCountError):
            hessian_energy(self.view, knn(self.view, 5), 2)

    def test_gram_schmidt(self) -> None:
        design = local_design_matrix(np.array([[1.0], [2.0], [3.0], [5.0]]))
        basis = modified_gram_schmidt(design)
        assert basis is not None
        assert np.allclose(basis.T @ basis, np.eye(3), atol=1e-12)
        # a repeated column is rank deficient
        assert modified_gram_schmidt(np.column_stack([design[:, 1], design[:, 1]])) is None


class TestIntrinsicDimension:
    def test_planar_data(self) -> None:
        dataset = make_synthetic(GeneratorSpec("linear_manifold", n=200, noise=0.0, m=2, d=5, seed=1))
        view = dataset.views[0]
        assert estimate_intrinsic_dim(view, knn(view, 20), 0.95) == 2

    def test_line(self) -> None:
        t = np.linspace(0.0, 1.0, 60)
        view = np.column_stack([t, 2 * t + 1, -t])
        assert estimate_intrinsic_dim(view, knn(view, 10)) == 1

    def test_threshold_near_one_on_noise(self) -> None:
        view = np.random.default_rng(6).standard_normal((80, 3))
        assert estimate_intrinsic_dim(view, knn(view, 10), 0.999999) == 3

    def test_invalid_threshold(self) -> None:
        view = np.random.default_rng(6).standard_normal((10, 2))
        with pytest.raises(ValueError):
            estimate_intrinsic_dim(view, knn(view, 3), 1.0)


class TestCombineManifolds:
    def setup_method(self) -> None:
        self.rng = np.random.default_rng(7)

    def test_vertex(self) -> None:
        first = ManifoldMatrix(random_psd(self.rng, 4), ManifoldKind.HESSIAN, "a")
        second = ManifoldMatrix(random_psd(self.rng, 4), ManifoldKind.HESSIAN, "b")
        combined = combine_manifolds([first, second], SimplexWeights(np.array([0.0, 1.0])))
        assert np.array_equal(combined.matrix, second.matrix)
        assert combined.kind == ManifoldKind.HESSIAN

    def test_same_matrix_any_weights(self) -> None:
        matrix = ManifoldMatrix(random_psd(self.rng, 4), ManifoldKind.HESSIAN, "a")
        combined = combine_manifolds([matrix, matrix], SimplexWeights(random_simplex(self.rng, 2)))
        assert np.allclose(combined.matrix, matrix.matrix, atol=1e-12)

    def test_stays_psd(self) -> None:
        for _ in range(10):
            mats = [ManifoldMatrix(random_psd(self.rng, 6, rank=2), ManifoldKind.LAPLACIAN, str(i)) for i in range(3)]
            is_psd, _ = check_psd(combine_manifolds(mats, SimplexWeights(random_simplex(self.rng, 3))).matrix)
            assert is_psd


class TestBuildManifold:
    def test_kinds(self) -> None:
        view = np.random.default_rng(9).standard_normal((30, 3))
        settings = ManifoldSettings(k=10, m=2)
        assert build_manifold(view, settings, ManifoldKind.HESSIAN).kind == ManifoldKind.HESSIAN
        assert build_manifold(view, settings, ManifoldKind.LAPLACIAN).kind == ManifoldKind.LAPLACIAN
        none = build_manifold(view, settings, ManifoldKind.NONE)
        assert not none.matrix.any()

    def test_estimates_dimension_when_unset(self) -> None:
        t = np.linspace(0.0, 1.0, 40)
        view = np.column_stack([t, t**2, np.zeros(40)])
        hessian = build_manifold(view, ManifoldSettings(k=8), ManifoldKind.HESSIAN)
        assert hessian.intrinsic_dim is not None and hessian.intrinsic_dim >= 1

    def test_settings_validation(self) -> None:
        with pytest.raises(ValueError):
            ManifoldSettings(k=0)
        with pytest.raises(ValueError):
            ManifoldSettings(dim_threshold=1.5)
        assert ManifoldKind.from_name("Hessian") == ManifoldKind.HESSIAN
