from dataclasses import replace
from typing import Sequence
from unittest.mock import patch

import numpy as np
import pytest
from sklearn.kernel_ridge import KernelRidge

from mhrlearn.dataset import MultiviewDataset
from mhrlearn.kernels import KernelSpec, SimplexWeights
from mhrlearn.manifold import ManifoldKind, ManifoldSettings
from mhrlearn.solvers import (
    MONOTONICITY_SLACK,
    FingerprintMismatchError,
    LossKind,
    MonotonicityViolationError,
    ObjectiveConfig,
    TraceEntry,
    TraceStep,
    alternate,
    fit_alternating,
    mhr_objective,
    predict,
    regularizer_energies,
    solve_beta,
    solve_beta_projected_gradient,
    solve_theta,
    theta_objective,
)
from tests.utils import grid_minimum, random_psd, small_dataset


def _assert_monotone(trace: Sequence[TraceEntry]) -> None:
    for before, after in zip(trace, trace[1:]):
        assert after.objective <= before.objective + MONOTONICITY_SLACK


class TestSolveBeta:
    def setup_method(self) -> None:
        self.rng = np.random.default_rng(0)
        self.kernel = random_psd(self.rng, 6)
        self.manifolds = [random_psd(self.rng, 6, rank=2) for _ in range(3)]
        self.alpha = 0.1 * self.rng.standard_normal(6)

    def test_matches_grid_search(self) -> None:
        # Given the beta subproblem h . beta + gamma_beta ||beta||^2
        config = ObjectiveConfig(gamma_i=0.01, gamma_beta=0.5)
        energies = regularizer_energies(self.alpha, self.kernel, self.manifolds, config.gamma_i)
        beta = solve_beta(self.alpha, self.kernel, self.manifolds, config)

        def objective(b: np.ndarray) -> float:
            return float(energies @ b + config.gamma_beta * b @ b)

        # Then no grid point of the simplex does better than the closed form
        _, grid_value = grid_minimum(objective, 3, 0.01)
        assert objective(beta.weights) <= grid_value + 1e-12

    def test_matches_projected_gradient(self) -> None:
        config = ObjectiveConfig(gamma_i=0.01, gamma_beta=0.5)
        closed = solve_beta(self.alpha, self.kernel, self.manifolds, config)
        iterative = solve_beta_projected_gradient(self.alpha, self.kernel, self.manifolds, config)
        assert np.allclose(closed.weights, iterative.weights, atol=1e-8)

    def test_without_beta_regularization_picks_the_smallest_energy(self) -> None:
        config = ObjectiveConfig(gamma_i=1.0, gamma_beta=0.0)
        energies = regularizer_energies(self.alpha, self.kernel, self.manifolds, config.gamma_i)
        beta = solve_beta(self.alpha, self.kernel, self.manifolds, config)
        assert beta == SimplexWeights.vertex(3, int(np.argmin(energies)))

    def test_ties_split_evenly(self) -> None:
        config = ObjectiveConfig(gamma_i=1.0, gamma_beta=0.0)
        beta = solve_beta(self.alpha, self.kernel, [self.manifolds[0]] * 2, config)
        assert beta.weights.tolist() == [0.5, 0.5]

    def test_projected_gradient_needs_regularization(self) -> None:
        with pytest.raises(ValueError):
            solve_beta_projected_gradient(self.alpha, self.kernel, self.manifolds, ObjectiveConfig(gamma_beta=0.0))


class TestSolveTheta:
    def setup_method(self) -> None:
        self.rng = np.random.default_rng(1)
        self.kernels = [random_psd(self.rng, 8) for _ in range(2)]
        self.manifold = random_psd(self.rng, 8, rank=3)
        self.alpha = 0.05 * self.rng.standard_normal(8)
        self.y = np.array([1.0, -1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0])

    def test_squared_loss_matches_grid_search(self) -> None:
        config = ObjectiveConfig(gamma_a=0.01, gamma_i=0.01, gamma_theta=0.1)
        objective = theta_objective(self.alpha, self.kernels, self.manifold, self.y, 4, config)
        theta = solve_theta(self.alpha, self.kernels, self.manifold, self.y, 4, config)
        _, grid_value = grid_minimum(objective, 2, 0.001)
        assert objective(theta.weights) <= grid_value + 1e-4 * max(1.0, abs(grid_value))

    def test_hinge_loss_never_worse_than_the_start(self) -> None:
        config = ObjectiveConfig(gamma_a=0.01, gamma_i=0.01, gamma_theta=0.1, loss=LossKind.HINGE, mu=1e-3)
        objective = theta_objective(self.alpha, self.kernels, self.manifold, self.y, 4, config)
        start = SimplexWeights(np.array([0.3, 0.7]))
        theta = solve_theta(self.alpha, self.kernels, self.manifold, self.y, 4, config, start)
        assert objective(theta.weights) <= objective(start.weights)

    def test_identical_kernels_keep_uniform_weights(self) -> None:
        config = ObjectiveConfig(gamma_theta=0.1)
        theta = solve_theta(self.alpha, [self.kernels[0]] * 2, self.manifold, self.y, 4, config)
        assert np.allclose(theta.weights, [0.5, 0.5], atol=1e-9)

    def test_single_kernel(self) -> None:
        theta = solve_theta(self.alpha, self.kernels[:1], self.manifold, self.y, 4, ObjectiveConfig())
        assert theta.weights.tolist() == [1.0]

    def test_squared_loss_weights_match_a_fine_grid(self) -> None:
        config = ObjectiveConfig(gamma_a=0.01, gamma_i=0.01, gamma_theta=0.1, tol_inner=1e-12)
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            kernels = [random_psd(rng, 8) for _ in range(2)]
            manifold = random_psd(rng, 8, rank=3)
            alpha = 0.05 * rng.standard_normal(8)
            objective = theta_objective(alpha, kernels, manifold, self.y, 4, config)
            theta = solve_theta(alpha, kernels, manifold, self.y, 4, config)
            grid_point, grid_value = grid_minimum(objective, 2, 1e-4)
            # the objective is strongly convex along the simplex, so the grid minimizer neighbors the optimum
            assert abs(theta.weights[0] - grid_point[0]) <= 1e-4 + 2e-5
            assert objective(theta.weights) <= grid_value + 1e-9 * max(1.0, abs(grid_value))

    def test_hinge_loss_within_the_smoothing_gap_of_the_grid(self) -> None:
        config = ObjectiveConfig(gamma_a=0.01, gamma_i=0.01, gamma_theta=0.1, loss=LossKind.HINGE, mu=1e-3)
        objective = theta_objective(self.alpha, self.kernels, self.manifold, self.y, 4, config)
        theta = solve_theta(self.alpha, self.kernels, self.manifold, self.y, 4, config)
        _, grid_value = grid_minimum(objective, 2, 1e-4)
        max_scale = max(float(np.abs(k[:4]).max()) for k in self.kernels)
        assert objective(theta.weights) <= grid_value + config.mu * max_scale / 2.0 + 1e-6

    @pytest.mark.parametrize("loss", [LossKind.SQUARED, LossKind.HINGE])
    def test_heavy_weight_penalty_gives_uniform_weights(self, loss: LossKind) -> None:
        config = ObjectiveConfig(gamma_a=0.01, gamma_i=0.01, gamma_theta=1e6, loss=loss)
        theta = solve_theta(self.alpha, self.kernels, self.manifold, self.y, 4, config)
        assert np.allclose(theta.weights, [0.5, 0.5], atol=1e-4)


class TestAlternate:
    def setup_method(self) -> None:
        self.rng = np.random.default_rng(2)
        self.n, self.l = 12, 6
        self.kernels = [random_psd(self.rng, self.n) / self.n for _ in range(3)]
        self.manifolds = [random_psd(self.rng, self.n, rank=4) / self.n for _ in range(3)]
        self.y = np.zeros(self.n)
        self.y[: self.l] = [1.0, -1.0] * 3

    @pytest.mark.parametrize("loss", [LossKind.SQUARED, LossKind.HINGE])
    def test_trace_never_increases(self, loss: LossKind) -> None:
        config = ObjectiveConfig(
            gamma_a=0.05, gamma_i=0.05, gamma_theta=0.01, gamma_beta=0.01, loss=loss, max_outer_rounds=10
        )
        result = alternate(self.kernels, self.manifolds, self.y, self.l, config)
        assert result.trace[0].step == TraceStep.INIT
        _assert_monotone(result.trace)
        assert result.trace[-1].objective <= result.trace[0].objective
        assert 1 <= result.rounds <= 10

    def test_final_objective_matches_trace(self) -> None:
        config = ObjectiveConfig(gamma_a=0.05, gamma_i=0.05)
        result = alternate(self.kernels, self.manifolds, self.y, self.l, config)
        value = mhr_objective(
            result.alpha, self.kernels, self.manifolds, result.theta, result.beta, self.y, self.l, config
        )
        assert value == pytest.approx(result.trace[-1].objective, rel=1e-12)

    def test_initial_objective(self) -> None:
        # alpha = 0 gives the squared loss 1 plus the weight penalties of the uniform starting point
        config = ObjectiveConfig(gamma_theta=0.3, gamma_beta=0.6)
        result = alternate(self.kernels, self.manifolds, self.y, self.l, config)
        assert result.trace[0].objective == pytest.approx(1.0 + 0.3 / 3 + 0.6 / 3)

    def test_single_view(self) -> None:
        # Given one view, there are no weights to learn
        result = alternate(self.kernels[:1], self.manifolds[:1], self.y, self.l, ObjectiveConfig())
        # Then one alpha step is all there is
        assert result.theta.weights.tolist() == [1.0]
        assert result.rounds == 1
        assert [entry.step for entry in result.trace] == [TraceStep.INIT, TraceStep.ALPHA]

    def test_fixed_weights(self) -> None:
        result = alternate(
            self.kernels, self.manifolds, self.y, self.l, ObjectiveConfig(), learn_theta=False, learn_beta=False
        )
        assert result.theta == SimplexWeights.uniform(3)
        assert result.beta == SimplexWeights.uniform(3)
        assert TraceStep.THETA not in {entry.step for entry in result.trace}

    def test_identical_views_share_the_weight(self) -> None:
        kernels = [self.kernels[0]] * 2
        manifolds = [self.manifolds[0]] * 2
        result = alternate(kernels, manifolds, self.y, self.l, ObjectiveConfig(gamma_theta=0.1, gamma_beta=0.1))
        assert np.allclose(result.theta.weights, [0.5, 0.5], atol=1e-9)
        assert np.allclose(result.beta.weights, [0.5, 0.5], atol=1e-9)

    def test_increase_in_an_exact_step_raises(self) -> None:
        # Given a beta step that moves all the weight onto the heavier regularizer
        manifolds = [np.zeros((self.n, self.n)), 100.0 * np.eye(self.n)]
        with patch("mhrlearn.solvers.alternating.solve_beta", return_value=SimplexWeights.vertex(2, 1)):
            # Then the increase is reported instead of being recorded
            with pytest.raises(MonotonicityViolationError, match="beta step"):
                alternate(self.kernels[:2], manifolds, self.y, self.l, ObjectiveConfig())

    def test_single_view_without_manifold_is_kernel_ridge(self) -> None:
        config = ObjectiveConfig(gamma_a=0.1, gamma_i=0.0)
        result = alternate(self.kernels[:1], [np.zeros((self.n, self.n))], self.y, self.l, config)
        labeled = self.kernels[0][: self.l, : self.l]
        ridge = KernelRidge(alpha=config.gamma_a * self.l, kernel="precomputed").fit(labeled, self.y[: self.l])
        assert np.allclose(result.alpha[self.l :], 0.0, atol=1e-10)
        assert np.allclose(result.alpha[: self.l], ridge.dual_coef_, rtol=1e-6, atol=1e-8)


class TestFitAndPredict:
    def setup_method(self) -> None:
        self.dataset = small_dataset(seed=3, n=24, n_labeled=8)
        self.specs = [KernelSpec(), KernelSpec()]
        self.settings = ManifoldSettings(k=6, m=1)
        self.model = fit_alternating(self.dataset, self.specs, ManifoldKind.HESSIAN, ObjectiveConfig(), self.settings)

    def test_model_contents(self) -> None:
        assert self.model.n == 24
        assert self.model.n_labeled == 8
        assert self.model.view_names == ("v0", "v1")
        assert all(spec.is_resolved for spec in self.model.kernel_specs)
        assert self.model.outer_rounds >= 1
        _assert_monotone(self.model.objective_trace)

    def test_training_scores_match_the_kernel_expansion(self) -> None:
        scores = predict(self.model, self.dataset.views)
        assert scores.shape == (24,)
        assert np.all(np.isfinite(scores))

    def test_vertex_theta_ignores_the_other_view(self) -> None:
        # Given all kernel weight on the first view
        model = replace(self.model, theta=SimplexWeights.vertex(2, 0))
        first, second = self.dataset.views
        # Then the second view's features do not affect the scores
        assert np.array_equal(predict(model, [first, second]), predict(model, [first, second * 5.0 + 1.0]))

    def test_fingerprint_checked(self) -> None:
        predict(self.model, self.dataset.views, train_views=self.dataset.views)
        other = small_dataset(seed=4, n=24, n_labeled=8)
        with pytest.raises(FingerprintMismatchError):
            predict(self.model, self.dataset.views, train_views=other.views)

    def test_width_checked(self) -> None:
        with pytest.raises(ValueError, match="width"):
            predict(self.model, [np.zeros((3, 3)), np.zeros((3, 5))])

    def test_needs_both_classes(self) -> None:
        labels = np.zeros(24)
        labels[:4] = 1
        dataset = MultiviewDataset.build(list(self.dataset.views), ["v0", "v1"], labels)
        with pytest.raises(ValueError, match="each class"):
            fit_alternating(dataset, self.specs, ManifoldKind.HESSIAN, ObjectiveConfig(), self.settings)
