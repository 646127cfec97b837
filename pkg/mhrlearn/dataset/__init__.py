from .multiview_dataset import (
    DatasetFormatError,
    FloatArray,
    IntArray,
    Label,
    LabelArray,
    LabelMask,
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
from .synthetic import GENERATORS, GeneratorSpec, UnknownGeneratorError, make_synthetic

__all__ = [
    "DatasetFormatError",
    "FloatArray",
    "IntArray",
    "Label",
    "LabelArray",
    "LabelMask",
    "LabelMaskError",
    "MultiviewDataset",
    "ViewScaler",
    "apply_mask",
    "class_balance",
    "load_dataset",
    "round_half_up",
    "save_dataset",
    "split_labels",
    "standardize",
    "train_test_split",
    "GENERATORS",
    "GeneratorSpec",
    "UnknownGeneratorError",
    "make_synthetic",
]
