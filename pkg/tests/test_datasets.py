"""CSV ingestion, validation, scaling, and the blob generator."""

import numpy as np
import pytest

from loghd.datasets import (
    DatasetSpec,
    gen_blobs,
    load_dataset,
    scale_blob_pair,
    write_csv,
)
from loghd.errors import IngestionError


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _spec(tmp_path, train_text, test_text, name="tiny"):
    return DatasetSpec(
        name=name,
        train_path=_write(tmp_path, "train.csv", train_text),
        test_path=_write(tmp_path, "test.csv", test_text),
    )


GOOD_TRAIN = "0.0,1.0,5\n2.0,3.0,7\n4.0,5.0,5\n6.0,7.0,7\n"
GOOD_TEST = "1.0,2.0,5\n3.0,4.0,7\n"


def test_load_scales_and_remaps_labels(tmp_path):
    loaded = load_dataset(_spec(tmp_path, GOOD_TRAIN, GOOD_TEST))
    assert loaded.train.class_count == 2
    np.testing.assert_array_equal(loaded.label_values, [5, 7])
    np.testing.assert_array_equal(loaded.train.labels, [0, 1, 0, 1])
    assert loaded.train.features.min() == 0.0
    assert loaded.train.features.max() == 1.0
    # Test split scaled by train statistics, not its own.
    np.testing.assert_allclose(loaded.test.features[0], [1 / 6, 1 / 6], atol=1e-12)


def test_ragged_row_rejected(tmp_path):
    bad = "0.0,1.0,5\n2.0,3.0,4.0,7\n"
    with pytest.raises(IngestionError):
        load_dataset(_spec(tmp_path, bad, GOOD_TEST))


def test_nan_rejected_with_row_number(tmp_path):
    bad = "0.0,1.0,5\n2.0,,7\n4.0,5.0,5\n6.0,7.0,7\n"
    with pytest.raises(IngestionError, match="row 2"):
        load_dataset(_spec(tmp_path, bad, GOOD_TEST))


def test_non_integer_label_rejected(tmp_path):
    bad = "0.0,1.0,5.5\n2.0,3.0,7\n"
    with pytest.raises(IngestionError, match="row 1"):
        load_dataset(_spec(tmp_path, bad, GOOD_TEST))


def test_unknown_test_label_rejected(tmp_path):
    bad_test = "1.0,2.0,5\n3.0,4.0,9\n"
    with pytest.raises(IngestionError, match="label 9"):
        load_dataset(_spec(tmp_path, GOOD_TRAIN, bad_test))


def test_feature_count_mismatch_between_splits(tmp_path):
    bad_test = "1.0,2.0,3.0,5\n"
    with pytest.raises(IngestionError):
        load_dataset(_spec(tmp_path, GOOD_TRAIN, bad_test))


def test_named_dataset_shape_validation(tmp_path):
    # "page" requires 10 features and 5 classes.
    with pytest.raises(IngestionError, match="expected 10 features"):
        load_dataset(_spec(tmp_path, GOOD_TRAIN, GOOD_TEST, name="page"))
    rng = np.random.default_rng(0)
    rows = []
    for i in range(25):
        feats = ",".join(f"{v:.3f}" for v in rng.random(10))
        rows.append(f"{feats},{i % 5}")
    text = "\n".join(rows) + "\n"
    loaded = load_dataset(_spec(tmp_path, text, text, name="page"))
    assert loaded.train.feature_count == 10
    assert loaded.train.class_count == 5


def test_empty_file_rejected(tmp_path):
    with pytest.raises(IngestionError):
        load_dataset(_spec(tmp_path, "", GOOD_TEST))


def test_missing_file_rejected(tmp_path):
    spec = DatasetSpec(name="x", train_path=str(tmp_path / "nope.csv"),
                       test_path=str(tmp_path / "nope.csv"))
    with pytest.raises(IngestionError):
        load_dataset(spec)


def test_blobs_deterministic():
    a_train, a_test = gen_blobs(3, 8, 10, 5, seed=77)
    b_train, b_test = gen_blobs(3, 8, 10, 5, seed=77)
    np.testing.assert_array_equal(a_train.features, b_train.features)
    np.testing.assert_array_equal(a_test.features, b_test.features)
    c_train, _ = gen_blobs(3, 8, 10, 5, seed=78)
    assert not np.array_equal(a_train.features, c_train.features)


def test_blob_csv_round_trip(tmp_path):
    train, test = gen_blobs(3, 6, 12, 6, seed=5)
    write_csv(tmp_path / "tr.csv", train)
    write_csv(tmp_path / "te.csv", test)
    loaded = load_dataset(
        DatasetSpec(name="blobs", train_path=str(tmp_path / "tr.csv"),
                    test_path=str(tmp_path / "te.csv"))
    )
    assert loaded.train.sample_count == 36
    assert loaded.train.feature_count == 6
    assert loaded.train.class_count == 3
    np.testing.assert_array_equal(loaded.train.labels, train.labels)


def test_scale_blob_pair_constant_feature():
    train, test = gen_blobs(2, 4, 5, 3, seed=9)
    frozen = train.features.copy()
    frozen[:, 2] = 1.5
    from loghd.core import LabeledDataset

    train2 = LabeledDataset.from_arrays(frozen, train.labels, 2)
    scaled_train, scaled_test, scaler = scale_blob_pair(train2, test)
    assert np.all(scaled_train.features[:, 2] == 0.0)
    assert np.all(scaled_train.features >= 0.0)
    assert np.all(scaled_train.features <= 1.0)
