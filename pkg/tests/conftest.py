import numpy as np
import pytest

from loghd.core import EncoderSpec, train_prototypes
from loghd.datasets import gen_blobs, scale_blob_pair


@pytest.fixture(scope="session")
def blob_pair_small():
    """Separable 4-class blobs, scaled, cheap enough for every module."""
    train, test = gen_blobs(4, 12, 40, 20, seed=101, cluster_std=1.0)
    train, test, scaler = scale_blob_pair(train, test)
    return train, test, scaler


@pytest.fixture(scope="session")
def proto_model_small(blob_pair_small):
    train, _, _ = blob_pair_small
    spec = EncoderSpec(input_dim=train.feature_count, hyper_dim=512, seed=11)
    return train_prototypes(train, spec)


def random_unit_rows(rng: np.random.Generator, rows: int, dim: int) -> np.ndarray:
    m = rng.standard_normal((rows, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)
