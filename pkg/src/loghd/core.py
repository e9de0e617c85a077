"""Encoding and the conventional one-prototype-per-class classifier.

Inputs are lifted into a D-dimensional space by a seeded random-projection
encoder: a fixed Gaussian matrix and a uniform phase vector are drawn from
the seed, and coordinate ``j`` of an encoding is
``nonlinearity(<row_j, x> + phase_j)``, normalized to unit length. Class
prototypes are the normalized superposition of the encoded training samples
of each class, and queries are matched by cosine similarity.

All functions here are pure and safe to call concurrently on immutable
models. Training accumulates per class with a fixed reduction order, so
results are independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, TrainingError

NONLINEARITIES = ("cosine", "sign", "none")


@dataclass(frozen=True)
class EncoderSpec:
    """Parameters of the deterministic random-projection encoder.

    Identical (input_dim, hyper_dim, seed, nonlinearity) tuples reproduce
    the same projection, so encodings are replay-identical across runs and
    processes (given the same numpy build).
    """

    input_dim: int
    hyper_dim: int
    seed: int
    nonlinearity: str = "cosine"

    def __post_init__(self) -> None:
        if self.input_dim < 1:
            raise ConfigurationError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.hyper_dim < 1:
            raise ConfigurationError(f"hyper_dim must be >= 1, got {self.hyper_dim}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigurationError(
                f"nonlinearity must be one of {NONLINEARITIES}, got {self.nonlinearity!r}"
            )


class Encoder:
    """Materialized projection for an :class:`EncoderSpec`.

    Draw order is fixed forever: first the (hyper_dim, input_dim) Gaussian
    matrix, then the length-hyper_dim phase vector in [0, 2pi).
    """

    def __init__(self, spec: EncoderSpec) -> None:
        rng = np.random.default_rng(spec.seed)
        self.spec = spec
        self.projection = rng.standard_normal((spec.hyper_dim, spec.input_dim))
        self.phase = rng.uniform(0.0, 2.0 * np.pi, spec.hyper_dim)

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Encode one feature vector into a unit-norm hypervector."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.spec.input_dim,):
            raise ValueError(
                f"expected a length-{self.spec.input_dim} feature vector, got shape {x.shape}"
            )
        return self._finish(self.projection @ x + self.phase)

    def encode_batch(self, features: np.ndarray) -> np.ndarray:
        """Encode a (N, input_dim) matrix into (N, hyper_dim) unit rows."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.spec.input_dim:
            raise ValueError(
                f"expected (N, {self.spec.input_dim}) features, got shape {features.shape}"
            )
        z = features @ self.projection.T + self.phase
        return self._finish(z)

    def _finish(self, z: np.ndarray) -> np.ndarray:
        nl = self.spec.nonlinearity
        if nl == "cosine":
            z = np.cos(z)
        elif nl == "sign":
            z = np.where(z >= 0.0, 1.0, -1.0)
        norms = np.linalg.norm(z, axis=-1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError("encoding collapsed to the zero vector")
        return z / norms


@lru_cache(maxsize=8)
def _encoder_for(spec: EncoderSpec) -> Encoder:
    return Encoder(spec)


def encode(spec: EncoderSpec, x: np.ndarray) -> np.ndarray:
    """Encode one feature vector; deterministic in (spec, x)."""
    return _encoder_for(spec).encode(x)


def encode_batch(spec: EncoderSpec, features: np.ndarray) -> np.ndarray:
    """Encode a feature matrix row-wise; deterministic in (spec, features)."""
    return _encoder_for(spec).encode_batch(features)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity ``<u/|u|, v/|v|>`` in [-1, 1].

    Raises ValueError if either vector has zero norm.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float((u @ v) / (nu * nv))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix plus integer labels in 0..class_count-1.

    Use :meth:`from_arrays` to validate; the plain constructor performs no
    checks so that operations can report their own degeneracies.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int

    @classmethod
    def from_arrays(
        cls, features: np.ndarray, labels: np.ndarray, class_count: int | None = None
    ) -> "LabeledDataset":
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must be a 1-D array matching the feature rows")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
        if not np.all(np.isfinite(features)):
            raise ValueError("features contain non-finite values")
        if labels.size == 0:
            raise ValueError("dataset is empty")
        if class_count is None:
            class_count = int(labels.max()) + 1
        if labels.min() < 0 or labels.max() >= class_count:
            raise ValueError(f"labels must lie in 0..{class_count - 1}")
        counts = np.bincount(labels, minlength=class_count)
        if np.any(counts == 0):
            missing = int(np.flatnonzero(counts == 0)[0])
            raise ValueError(f"class {missing} has no samples")
        return cls(features=features, labels=labels, class_count=class_count)

    @property
    def sample_count(self) -> int:
        return int(self.labels.shape[0])

    @property
    def feature_count(self) -> int:
        return int(self.features.shape[1])

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)


@dataclass(frozen=True, eq=False)
class PrototypeModel:
    """Conventional HDC classifier: one normalized prototype per class."""

    prototypes: np.ndarray  # (class_count, hyper_dim), unit rows
    encoder: EncoderSpec

    @property
    def class_count(self) -> int:
        return int(self.prototypes.shape[0])

    @property
    def hyper_dim(self) -> int:
        return int(self.prototypes.shape[1])


def train_prototypes(data: LabeledDataset, spec: EncoderSpec) -> PrototypeModel:
    """Superpose encoded samples per class and normalize each sum.

    Raises TrainingError for an empty class or a prototype sum that is
    exactly zero (degenerate data).
    """
    if data.feature_count != spec.input_dim:
        raise ValueError(
            f"dataset has {data.feature_count} features but encoder expects {spec.input_dim}"
        )
    encoded = encode_batch(spec, data.features)
    prototypes = np.zeros((data.class_count, spec.hyper_dim))
    for c in range(data.class_count):
        members = encoded[data.labels == c]
        if members.shape[0] == 0:
            raise TrainingError(f"class {c} has no training samples")
        total = members.sum(axis=0)
        norm = np.linalg.norm(total)
        if norm == 0.0:
            raise TrainingError(f"class {c} prototype sum is the zero vector")
        prototypes[c] = total / norm
    return PrototypeModel(prototypes=prototypes, encoder=spec)


def similarity_scores(model: PrototypeModel, encoded: np.ndarray) -> np.ndarray:
    """Cosine scores of unit-norm encodings against all prototypes.

    Prototype rows are normalized here, so the decision is scale invariant
    even for hand-built models. ``encoded`` is (N, D) with unit rows;
    returns (N, class_count).
    """
    norms = np.linalg.norm(model.prototypes, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("prototype with zero norm")
    return encoded @ (model.prototypes / norms[:, None]).T


def predict_conventional(model: PrototypeModel, x: np.ndarray) -> int:
    """Argmax of cosine similarity against the prototypes; ties break low."""
    h = encode(model.encoder, x)
    return int(np.argmax(similarity_scores(model, h[None, :])[0]))


def predict_conventional_batch(model: PrototypeModel, features: np.ndarray) -> np.ndarray:
    """Vectorized :func:`predict_conventional` over feature rows."""
    encoded = encode_batch(model.encoder, features)
    return np.argmax(similarity_scores(model, encoded), axis=1)
