import numpy as np
import pytest
from scipy.linalg import lu_factor
from sklearn.kernel_ridge import KernelRidge

from mhrlearn.solvers import (
    ObjectiveConfig,
    SingularSystemError,
    condition_estimate,
    fit_kls,
    kls_objective,
    kls_system,
)
from tests.utils import finite_difference_gradient, random_psd


class TestFitKls:
    def setup_method(self) -> None:
        self.rng = np.random.default_rng(0)
        self.n, self.l = 10, 4
        self.kernel = random_psd(self.rng, self.n)
        self.manifold = random_psd(self.rng, self.n, rank=3)
        self.y = np.zeros(self.n)
        self.y[: self.l] = [1.0, -1.0, 1.0, -1.0]

    def test_single_example(self) -> None:
        # Given n = l = 1, K = [[1]], no regularizer and gamma_A = 1
        alpha = fit_kls(np.ones((1, 1)), np.zeros((1, 1)), np.ones(1), 1, ObjectiveConfig(gamma_a=1.0, gamma_i=0.0))
        # Then alpha = 1 / (1 + 1)
        assert alpha.tolist() == [0.5]

    def test_large_ambient_weight_shrinks_to_zero(self) -> None:
        alpha = fit_kls(self.kernel, self.manifold, self.y, self.l, ObjectiveConfig(gamma_a=1e9))
        assert np.abs(alpha).max() < 1e-6

    def test_stationary_point_of_the_objective(self) -> None:
        # Given the closed-form solution
        config = ObjectiveConfig(gamma_a=0.1, gamma_i=0.05)
        alpha = fit_kls(self.kernel, self.manifold, self.y, self.l, config)
        # Then the objective's gradient vanishes there
        gradient = finite_difference_gradient(
            lambda a: kls_objective(a, self.kernel, self.manifold, self.y, self.l, config), alpha
        )
        assert np.abs(gradient).max() < 1e-5

    def test_beats_perturbations(self) -> None:
        config = ObjectiveConfig(gamma_a=0.1, gamma_i=0.05)
        alpha = fit_kls(self.kernel, self.manifold, self.y, self.l, config)
        best = kls_objective(alpha, self.kernel, self.manifold, self.y, self.l, config)
        for _ in range(20):
            moved = alpha + 1e-3 * self.rng.standard_normal(self.n)
            assert kls_objective(moved, self.kernel, self.manifold, self.y, self.l, config) >= best

    def test_unlabeled_targets_are_ignored(self) -> None:
        config = ObjectiveConfig()
        noisy = self.y.copy()
        noisy[self.l :] = 7.0
        assert np.array_equal(
            fit_kls(self.kernel, self.manifold, self.y, self.l, config),
            fit_kls(self.kernel, self.manifold, noisy, self.l, config),
        )

    def test_system_matrix(self) -> None:
        config = ObjectiveConfig(gamma_a=0.5, gamma_i=0.0)
        system = kls_system(np.eye(3), np.zeros((3, 3)), 2, config)
        assert np.array_equal(system, np.diag([2.0, 2.0, 1.0]))

    def test_singular_system(self) -> None:
        # Given a zero kernel and no ambient regularization
        with pytest.raises(SingularSystemError, match="gamma_A"):
            fit_kls(np.zeros((3, 3)), np.zeros((3, 3)), np.ones(3), 2, ObjectiveConfig(gamma_a=0.0, gamma_i=0.0))

    def test_ill_conditioned_system(self) -> None:
        kernel = np.diag([1.0, 1e-16])
        with pytest.raises(SingularSystemError, match="condition estimate"):
            fit_kls(kernel, np.zeros((2, 2)), np.ones(2), 2, ObjectiveConfig(gamma_a=0.0, gamma_i=0.0))

    def test_condition_estimate_from_the_factors(self) -> None:
        system = kls_system(self.kernel, self.manifold, self.l, ObjectiveConfig(gamma_a=0.1, gamma_i=0.05))
        estimate = condition_estimate(system, lu_factor(system))
        exact = float(np.linalg.cond(system, 1))
        # the estimate bounds the 1-norm condition number from below and is rarely far off
        assert exact / 10.0 <= estimate <= exact * (1.0 + 1e-6)

    def test_reduces_to_kernel_ridge_without_a_manifold(self) -> None:
        # Given no manifold term
        config = ObjectiveConfig(gamma_a=0.1, gamma_i=0.0)
        alpha = fit_kls(self.kernel, self.manifold, self.y, self.l, config)
        # Then unlabeled examples get no weight and the labeled block is kernel ridge regression
        ridge = KernelRidge(alpha=config.gamma_a * self.l, kernel="precomputed")
        ridge.fit(self.kernel[: self.l, : self.l], self.y[: self.l])
        assert np.array_equal(alpha[self.l :], np.zeros(self.n - self.l))
        assert np.allclose(alpha[: self.l], ridge.dual_coef_, rtol=1e-8, atol=1e-10)

    def test_shape_checks(self) -> None:
        with pytest.raises(ValueError):
            fit_kls(self.kernel, np.zeros((3, 3)), self.y, self.l, ObjectiveConfig())
        with pytest.raises(ValueError):
            fit_kls(self.kernel, self.manifold, self.y, 0, ObjectiveConfig())


class TestObjectiveConfig:
    def test_rejects_negative_weights(self) -> None:
        with pytest.raises(ValueError, match="gamma_i"):
            ObjectiveConfig(gamma_i=-1.0)
        with pytest.raises(ValueError):
            ObjectiveConfig(mu=0.0)
        with pytest.raises(ValueError):
            ObjectiveConfig(max_outer_rounds=0)
