from typing import List, Sequence, Tuple

import numpy as np
import pytest

from mhrlearn.dataset import GeneratorSpec, make_synthetic
from mhrlearn.evaluation import EvalReport, SweepSettings, TuneResult, UnknownMethodError, run_sweep, tune_grid
from mhrlearn.kernels import KernelSpec
from mhrlearn.manifold import ManifoldSettings
from mhrlearn.solvers import ObjectiveConfig


class TestRunSweep:
    def setup_method(self) -> None:
        self.dataset = make_synthetic(GeneratorSpec("two_moons_views", n=60, seed=0))
        self.specs = [KernelSpec(), KernelSpec()]
        self.manifold = ManifoldSettings(k=10)
        self.config = ObjectiveConfig()

    def _sweep(
        self, methods: Sequence[str], fractions: Tuple[float, ...], repeats: int, seed: int = 0
    ) -> List[EvalReport]:
        settings = SweepSettings(fractions=fractions, repeats=repeats, base_seed=seed)
        return run_sweep(self.dataset, methods, settings, self.config, self.specs, self.manifold)

    def test_one_cell(self) -> None:
        reports = self._sweep(["mHesLS"], (0.5,), 1)
        assert len(reports) == 1
        report = reports[0]
        assert (report.method, report.fraction, report.repeat, report.seed) == ("mHesLS", 0.5, 0, 0)
        assert [name for name, _ in report.class_aps] == ["label"]
        assert 0.0 <= report.map <= 1.0
        assert report.map == report.class_aps[0][1]

    def test_cartesian_cells_sorted_by_key(self) -> None:
        # Given 2 methods x 2 fractions x 2 repeats
        reports = self._sweep(["mHesLS", "AveLS"], (0.2, 0.5), 2, seed=3)
        # Then there are 8 reports in key order, seeded base + repeat
        keys = [(r.method, r.fraction, r.repeat) for r in reports]
        assert len(keys) == 8
        assert keys == sorted(keys)
        assert {r.seed for r in reports} == {3, 4}

    def test_deterministic(self) -> None:
        first = self._sweep(["mHesLS", "LapLS:*"], (0.3,), 2)
        second = self._sweep(["mHesLS", "LapLS:*"], (0.3,), 2)
        assert [(r.method, r.class_aps, r.map) for r in first] == [(r.method, r.class_aps, r.map) for r in second]

    def test_unknown_method(self) -> None:
        with pytest.raises(UnknownMethodError):
            self._sweep(["mHesQP"], (0.5,), 1)

    def test_settings_validation(self) -> None:
        with pytest.raises(ValueError):
            SweepSettings(fractions=(0.0,))
        with pytest.raises(ValueError):
            SweepSettings(repeats=0)


class TestTuneGrid:
    def setup_method(self) -> None:
        self.dataset = make_synthetic(GeneratorSpec("two_moons_views", n=60, seed=2))
        self.specs = [KernelSpec(), KernelSpec()]
        self.settings = SweepSettings(base_seed=1)

    def _tune(self) -> TuneResult:
        return tune_grid(
            self.dataset, "mLapLS", [-2, 0], self.settings, ObjectiveConfig(), self.specs, ManifoldSettings(k=8)
        )

    def test_exhaustive_grid(self) -> None:
        result = self._tune()
        assert result.keys == ("gamma_a", "gamma_i")
        assert [values for values, _ in result.table] == [(0.01, 0.01), (0.01, 1.0), (1.0, 0.01), (1.0, 1.0)]
        finite = [score for _, score in result.table if np.isfinite(score)]
        assert result.best_map == max(finite)
        assert result.best_config.gamma_a == result.best_values[0]
        assert result.best_config.gamma_i == result.best_values[1]

    def test_winner_is_reproducible(self) -> None:
        first, second = self._tune(), self._tune()
        assert first.best_values == second.best_values
        assert np.array_equal([score for _, score in first.table], [score for _, score in second.table], equal_nan=True)

    def test_rejects_unknown_keys(self) -> None:
        with pytest.raises(ValueError, match="tunable"):
            tune_grid(self.dataset, "mLapLS", [0], self.settings, ObjectiveConfig(), self.specs, keys=("sigma",))

    def test_rejects_methods_expanding_to_several(self) -> None:
        with pytest.raises(UnknownMethodError):
            tune_grid(self.dataset, "LapLS:*", [0], self.settings, ObjectiveConfig(), self.specs, ManifoldSettings(k=8))
