"""Dataset ingestion (CSV), per-feature min-max scaling, and the built-in
synthetic blob generator.

CSV rows are features followed by an integer label, comma-separated, no
header. Features are min-max scaled to [0, 1] with statistics from the
training split; labels are remapped to 0..C-1 preserving sorted original
order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .core import LabeledDataset
from .errors import IngestionError
from .methods import FeatureScaler

# Expected (feature_count, class_count) for the named reference datasets.
KNOWN_DATASETS = {
    "isolet": (617, 26),
    "ucihar": (261, 12),
    "pamap2": (75, 5),
    "page": (10, 5),
}


@dataclass(frozen=True)
class DatasetSpec:
    """Where a CSV dataset lives and what shape it must have."""

    name: str
    train_path: str
    test_path: str
    feature_count: int | None = None
    class_count: int | None = None


@dataclass(frozen=True, eq=False)
class LoadedDataset:
    """Train/test splits (already scaled) plus the scaler and label map."""

    train: LabeledDataset
    test: LabeledDataset
    scaler: FeatureScaler
    label_values: np.ndarray  # original label for each remapped index


def _read_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        frame = pd.read_csv(path, header=None, on_bad_lines="error")
    except FileNotFoundError:
        raise IngestionError(f"dataset file not found: {path}")
    except pd.errors.ParserError as exc:
        raise IngestionError(f"{path}: ragged or malformed row ({exc})")
    except pd.errors.EmptyDataError:
        raise IngestionError(f"{path}: file is empty")
    values = frame.to_numpy(dtype=np.float64)
    if values.shape[1] < 2:
        raise IngestionError(f"{path}: rows need at least one feature and a label")
    bad = np.flatnonzero(~np.isfinite(values).all(axis=1))
    if bad.size:
        raise IngestionError(f"{path}: non-numeric or missing value at row {bad[0] + 1}")
    features = values[:, :-1]
    labels_raw = values[:, -1]
    nonint = np.flatnonzero(np.mod(labels_raw, 1) != 0)
    if nonint.size:
        raise IngestionError(f"{path}: non-integer label at row {nonint[0] + 1}")
    return features, labels_raw.astype(np.int64)


def load_dataset(spec: DatasetSpec) -> LoadedDataset:
    """Load, validate, scale, and remap a train/test CSV pair."""
    train_x, train_y = _read_csv(spec.train_path)
    test_x, test_y = _read_csv(spec.test_path)
    if test_x.shape[1] != train_x.shape[1]:
        raise IngestionError(
            f"test split has {test_x.shape[1]} features but train has {train_x.shape[1]}"
        )
    expected = KNOWN_DATASETS.get(spec.name.lower())
    feature_count = spec.feature_count
    class_count = spec.class_count
    if expected is not None:
        feature_count = feature_count or expected[0]
        class_count = class_count or expected[1]
    if feature_count is not None and train_x.shape[1] != feature_count:
        raise IngestionError(
            f"{spec.name}: expected {feature_count} features, found {train_x.shape[1]}"
        )

    label_values = np.unique(train_y)
    if class_count is not None and label_values.size != class_count:
        raise IngestionError(
            f"{spec.name}: expected {class_count} classes, found {label_values.size}"
        )
    remap = {int(v): i for i, v in enumerate(label_values)}
    train_labels = np.array([remap[int(v)] for v in train_y], dtype=np.int64)
    unknown = [i for i, v in enumerate(test_y) if int(v) not in remap]
    if unknown:
        raise IngestionError(
            f"{spec.test_path}: unknown label {int(test_y[unknown[0]])} at row {unknown[0] + 1}"
        )
    test_labels = np.array([remap[int(v)] for v in test_y], dtype=np.int64)

    scaler = FeatureScaler(
        minimum=train_x.min(axis=0), span=train_x.max(axis=0) - train_x.min(axis=0)
    )
    try:
        train = LabeledDataset.from_arrays(
            scaler.apply(train_x), train_labels, label_values.size
        )
        test = LabeledDataset.from_arrays(
            scaler.apply(test_x), test_labels, label_values.size
        )
    except ValueError as exc:
        raise IngestionError(str(exc))
    return LoadedDataset(train=train, test=test, scaler=scaler, label_values=label_values)


def gen_blobs(
    class_count: int,
    features: int,
    train_per_class: int,
    test_per_class: int,
    *,
    seed: int,
    center_spread: float = 3.0,
    cluster_std: float = 1.0,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic isotropic Gaussian blobs, one cluster per class.

    Draw order is fixed: centers, then the train block, then the test block,
    so a given seed always reproduces the same dataset.
    """
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((class_count, features)) * center_spread
    train_x = np.repeat(centers, train_per_class, axis=0) + rng.standard_normal(
        (class_count * train_per_class, features)
    ) * cluster_std
    test_x = np.repeat(centers, test_per_class, axis=0) + rng.standard_normal(
        (class_count * test_per_class, features)
    ) * cluster_std
    train_y = np.repeat(np.arange(class_count), train_per_class)
    test_y = np.repeat(np.arange(class_count), test_per_class)
    train = LabeledDataset.from_arrays(train_x, train_y, class_count)
    test = LabeledDataset.from_arrays(test_x, test_y, class_count)
    return train, test


def scale_blob_pair(
    train: LabeledDataset, test: LabeledDataset
) -> tuple[LabeledDataset, LabeledDataset, FeatureScaler]:
    """Min-max scale an in-memory pair with train-split statistics."""
    scaler = FeatureScaler(
        minimum=train.features.min(axis=0),
        span=train.features.max(axis=0) - train.features.min(axis=0),
    )
    scaled_train = LabeledDataset.from_arrays(
        scaler.apply(train.features), train.labels, train.class_count
    )
    scaled_test = LabeledDataset.from_arrays(
        scaler.apply(test.features), test.labels, test.class_count
    )
    return scaled_train, scaled_test, scaler


def write_csv(path: str | Path, data: LabeledDataset) -> None:
    """Write features-then-label rows, comma-separated, no header."""
    with open(path, "w") as fh:
        for row, label in zip(data.features, data.labels):
            fh.write(",".join(f"{v:.10g}" for v in row) + f",{int(label)}\n")
