import pathlib
from tempfile import TemporaryDirectory

import numpy as np
import pytest

from mhrlearn.dataset import (
    DatasetFormatError,
    LabelMaskError,
    MultiviewDataset,
    ViewScaler,
    apply_mask,
    class_balance,
    load_dataset,
    round_half_up,
    save_dataset,
    split_labels,
    standardize,
    train_test_split,
)
from tests.utils import small_dataset, write_dataset_dir


class TestLoadDataset:
    def setup_method(self) -> None:
        self.tmp = TemporaryDirectory()
        self.root = pathlib.Path(self.tmp.name)

    def teardown_method(self) -> None:
        self.tmp.cleanup()

    def test_two_views_four_rows(self) -> None:
        # Given two views of 4 rows and labels (+1, -1, 0, 0)
        write_dataset_dir(
            self.root / "data",
            {"a": [[0, 1], [1, 1], [2, 1], [3, 1]], "b": [[5], [6], [7], [8]]},
            [[1], [-1], [0], [0]],
        )
        # When it is loaded
        dataset = load_dataset(self.root / "data")
        # Then the counts reflect the files
        assert dataset.n_examples == 4
        assert dataset.n_labeled == 2
        assert dataset.n_unlabeled == 2
        assert dataset.view_names == ("a", "b")
        assert dataset.view_widths == (2, 1)

    def test_labeled_examples_move_first(self) -> None:
        # Given labels (0, +1, -1, 0)
        write_dataset_dir(self.root / "data", {"a": [[0.0], [1.0], [2.0], [3.0]]}, [[0], [1], [-1], [0]])
        dataset = load_dataset(self.root / "data")
        # Then examples 1 and 2 come first and the permutation remembers where everyone came from
        assert dataset.n_labeled == 2
        assert dataset.permutation.tolist() == [1, 2, 0, 3]
        assert dataset.views[0][:, 0].tolist() == [1.0, 2.0, 0.0, 3.0]
        assert dataset.labels.tolist() == [1, -1, 0, 0]

    def test_row_count_mismatch(self) -> None:
        # Given 5 label rows but 4 view rows
        write_dataset_dir(self.root / "data", {"a": [[0.0], [1.0], [2.0], [3.0]]}, [[1], [-1], [0], [0], [1]])
        with pytest.raises(DatasetFormatError, match="row count mismatch"):
            load_dataset(self.root / "data")

    def test_missing_directory(self) -> None:
        with pytest.raises(FileNotFoundError, match="not found"):
            load_dataset(self.root / "nothing-here")

    def test_bad_label_value(self) -> None:
        write_dataset_dir(self.root / "data", {"a": [[0.0], [1.0]]}, [[2], [-1]])
        with pytest.raises(DatasetFormatError):
            load_dataset(self.root / "data")

    def test_non_numeric_cell(self) -> None:
        write_dataset_dir(self.root / "data", {"a": [[0.0], [1.0]]}, [[1], [-1]])
        (self.root / "data" / "view_a.csv").write_text("f0\n0.0\nabc\n")
        with pytest.raises(DatasetFormatError, match="non-numeric"):
            load_dataset(self.root / "data")

    def test_multi_label_columns(self) -> None:
        # Given two one-vs-rest label columns
        write_dataset_dir(
            self.root / "data",
            {"a": [[0.0], [1.0], [2.0]]},
            [[1, -1], [-1, 1], [0, 0]],
            class_names=("cat", "dog"),
        )
        dataset = load_dataset(self.root / "data")
        assert dataset.class_names == ("cat", "dog")
        assert dataset.task("dog").tolist() == [-1, 1, 0]
        with pytest.raises(DatasetFormatError):
            dataset.labels

    def test_partially_labeled_example_rejected(self) -> None:
        write_dataset_dir(
            self.root / "data", {"a": [[0.0], [1.0]]}, [[1, 0], [-1, 1]], class_names=("cat", "dog")
        )
        with pytest.raises(DatasetFormatError, match="labeled for some classes"):
            load_dataset(self.root / "data")

    def test_save_load_round_trip(self) -> None:
        # Given a dataset with latent coordinates whose labeled examples were reordered
        rng = np.random.default_rng(3)
        labels = np.array([0, 1, 0, -1, 1, 0], dtype=np.int8)
        dataset = MultiviewDataset.build(
            [rng.standard_normal((6, 2)), rng.standard_normal((6, 3))], ["x", "y"], labels, latent=rng.uniform(size=6)
        )
        # When it is written and read back
        save_dataset(dataset, self.root / "copy")
        loaded = load_dataset(self.root / "copy")
        # Then everything matches exactly
        assert loaded.view_names == dataset.view_names
        for original, reread in zip(dataset.views, loaded.views):
            assert np.array_equal(original, reread)
        assert np.array_equal(loaded.label_matrix, dataset.label_matrix)
        assert np.array_equal(loaded.permutation, dataset.permutation)
        assert loaded.latent is not None and dataset.latent is not None
        assert np.array_equal(loaded.latent, dataset.latent)
        assert loaded.content_hash() == dataset.content_hash()

    def test_subset_round_trip(self) -> None:
        # Given a subset whose examples keep their positions in the full dataset
        part = small_dataset(seed=5, n=12, n_labeled=4).subset([9, 3, 7, 1])
        # When it is written and read back
        save_dataset(part, self.root / "part")
        loaded = load_dataset(self.root / "part")
        # Then the rows are renumbered from zero in the same relative order
        assert sorted(loaded.permutation.tolist()) == [0, 1, 2, 3]
        order, back = np.argsort(part.permutation), np.argsort(loaded.permutation)
        for original, reread in zip(part.views, loaded.views):
            assert np.array_equal(original[order], reread[back])
        assert np.array_equal(part.label_matrix[order], loaded.label_matrix[back])
        assert loaded.n_labeled == part.n_labeled


class TestDataset:
    def test_arrays_are_read_only(self) -> None:
        dataset = small_dataset()
        with pytest.raises(ValueError):
            dataset.views[0][0, 0] = 1.0

    def test_labeled_block_must_come_first(self) -> None:
        with pytest.raises(DatasetFormatError, match="first l"):
            MultiviewDataset(
                views=(np.zeros((3, 1)),),
                view_names=("a",),
                label_matrix=np.array([[0], [1], [-1]], dtype=np.int8),
                class_names=("label",),
                permutation=np.arange(3),
            )

    def test_duplicate_view_names(self) -> None:
        with pytest.raises(DatasetFormatError, match="duplicate"):
            MultiviewDataset.build([np.zeros((2, 1)), np.zeros((2, 1))], ["a", "a"], [1, -1])

    def test_content_hash_tracks_labels(self) -> None:
        dataset = small_dataset()
        relabeled = dataset.with_labels(-dataset.label_matrix)
        assert dataset.content_hash() == small_dataset().content_hash()
        assert dataset.content_hash() != relabeled.content_hash()

    def test_select_views(self) -> None:
        dataset = small_dataset(widths=(3, 2, 4))
        selected = dataset.select_views(["v2", "v0"])
        assert selected.view_names == ("v2", "v0")
        assert selected.view_widths == (4, 3)
        with pytest.raises(DatasetFormatError):
            dataset.select_views(["missing"])

    def test_class_balance(self) -> None:
        assert class_balance(small_dataset(n_labeled=8)) == {"label": (4, 4)}

    def test_round_half_up(self) -> None:
        assert round_half_up(2.5) == 3
        assert round_half_up(0.5) == 1
        assert round_half_up(2.4999) == 2


class TestSplitLabels:
    def setup_method(self) -> None:
        labels = np.where(np.arange(100) < 50, 1, -1)
        self.balanced = MultiviewDataset.build([np.arange(200.0).reshape(100, 2)], ["a"], labels)

    def test_same_seed_same_mask(self) -> None:
        # Given n=10, fraction 0.5, seed 7 run twice
        dataset = MultiviewDataset.build([np.arange(10.0)[:, None]], ["a"], [1, -1] * 5)
        first = split_labels(dataset, 0.5, 7)
        second = split_labels(dataset, 0.5, 7)
        # Then the masks are identical
        assert first == second
        assert len(first.labeled_indices) == 5

    def test_full_fraction_keeps_every_label(self) -> None:
        dataset = small_dataset(n=20, n_labeled=6)
        mask = split_labels(dataset, 1.0, 0)
        assert mask.labeled_indices == tuple(range(6))

    def test_stratified(self) -> None:
        # Given 100 examples split 50/50 and fraction 0.1
        mask = split_labels(self.balanced, 0.1, 11)
        picked = self.balanced.labels[list(mask.labeled_indices)]
        # Then 10 indices are kept, with both classes represented
        assert len(mask.labeled_indices) == 10
        assert (picked == 1).sum() >= 1
        assert (picked == -1).sum() >= 1

    def test_every_class_gets_a_label(self) -> None:
        # Given a 95/5 imbalance where the proportional share of the minority class rounds to zero
        labels = np.where(np.arange(100) < 95, 1, -1)
        dataset = MultiviewDataset.build([np.zeros((100, 1))], ["a"], labels)
        mask = split_labels(dataset, 0.05, 0)
        assert (dataset.labels[list(mask.labeled_indices)] == -1).sum() >= 1

    def test_invalid_fraction(self) -> None:
        with pytest.raises(LabelMaskError):
            split_labels(self.balanced, 0.0, 0)
        with pytest.raises(LabelMaskError):
            split_labels(self.balanced, 1.5, 0)

    def test_zero_label_fraction(self) -> None:
        dataset = MultiviewDataset.build([np.zeros((4, 1))], ["a"], [1, -1, 1, -1])
        with pytest.raises(LabelMaskError, match="zero labels"):
            split_labels(dataset, 0.1, 0)

    def test_apply_mask(self) -> None:
        # Given a mask over the balanced dataset
        mask = split_labels(self.balanced, 0.2, 5)
        masked = apply_mask(self.balanced, mask)
        # Then only the masked examples stay labeled, they come first, and their labels survived
        assert masked.n_labeled == 20
        kept = set(self.balanced.permutation[list(mask.labeled_indices)].tolist())
        assert set(masked.permutation[:20].tolist()) == kept
        for row in range(masked.n_examples):
            original = masked.permutation[row]
            expected = self.balanced.labels[original] if row < 20 else 0
            assert masked.labels[row] == expected

    def test_apply_mask_rejects_unlabeled_examples(self) -> None:
        dataset = small_dataset(n=10, n_labeled=4)
        mask = split_labels(dataset, 1.0, 0)
        bogus = type(mask)(labeled_indices=(0, 9), fraction=0.5, seed=0)
        with pytest.raises(LabelMaskError):
            apply_mask(dataset, bogus)


class TestTrainTestSplit:
    def test_sizes_and_coverage(self) -> None:
        dataset = small_dataset(n=30, n_labeled=20)
        train, test = train_test_split(dataset, 0.5, 3)
        assert train.n_examples == 15
        assert test.n_examples == 15
        together = sorted(train.permutation.tolist() + test.permutation.tolist())
        assert together == list(range(30))

    def test_stratified_by_class(self) -> None:
        labels = np.where(np.arange(40) < 20, 1, -1)
        dataset = MultiviewDataset.build([np.zeros((40, 1))], ["a"], labels)
        _, test = train_test_split(dataset, 0.5, 0)
        assert (test.labels == 1).sum() == 10
        assert (test.labels == -1).sum() == 10

    def test_deterministic(self) -> None:
        dataset = small_dataset(n=30, n_labeled=20)
        first = train_test_split(dataset, 0.3, 9)
        second = train_test_split(dataset, 0.3, 9)
        assert np.array_equal(first[1].permutation, second[1].permutation)

    def test_empty_side_rejected(self) -> None:
        with pytest.raises(LabelMaskError):
            train_test_split(small_dataset(n=4, n_labeled=2), 0.01, 0)


class TestViewScaler:
    def test_standardize(self) -> None:
        rng = np.random.default_rng(1)
        view = np.column_stack([rng.normal(5.0, 3.0, 50), np.full(50, 2.0)])
        dataset = MultiviewDataset.build([view], ["a"], np.zeros(50))
        scaled, scaler = standardize(dataset)
        assert np.allclose(scaled.views[0][:, 0].mean(), 0.0)
        assert np.allclose(scaled.views[0][:, 0].std(), 1.0)
        # constant columns are centered, not divided by zero
        assert np.array_equal(scaled.views[0][:, 1], np.zeros(50))
        assert np.allclose(scaler.transform([view])[0], scaled.views[0])

    def test_view_count_checked(self) -> None:
        scaler = ViewScaler.fit([np.ones((3, 2))])
        with pytest.raises(DatasetFormatError):
            scaler.transform([np.ones((3, 2)), np.ones((3, 2))])
