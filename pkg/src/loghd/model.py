"""Bundle construction, activation profiles, nearest-profile decoding, and
supervised refinement.

Instead of one prototype per class, the classifier stores n bundle
hypervectors, each a weighted superposition of the class prototypes with
weights given by a codebook column. A query is summarized by its activation
vector (cosine similarity against every bundle) and decoded to the class
whose mean activation profile is nearest in squared Euclidean distance.
Optional refinement nudges the bundles so activations approach the
code-implied targets t(s) = 2s/(k-1) - 1.

Inference is pure and concurrent-safe on an immutable model. Refinement is
sequential over samples by definition and must not be parallelized across
epochs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .core import EncoderSpec, LabeledDataset, PrototypeModel, encode, encode_batch
from .errors import ConfigurationError, TrainingError

BUNDLE_NORM_TOL = 1e-6


@dataclass
class OpCounters:
    """Instrumentation: D-dimensional similarity ops and n-dimensional
    distance ops performed by inference."""

    similarity_ops: int = 0
    distance_ops: int = 0


@dataclass(frozen=True, eq=False)
class LogHDModel:
    """n bundles + per-class activation profiles + the codebook behind them."""

    bundles: np.ndarray  # (n, hyper_dim), unit rows
    profiles: np.ndarray  # (class_count, n), entries in [-1, 1]
    codebook: Codebook
    encoder: EncoderSpec

    def __post_init__(self) -> None:
        n, d = self.bundles.shape
        if self.codebook.code_length != n:
            raise ConfigurationError("bundle count does not match codebook columns")
        if self.profiles.shape != (self.codebook.class_count, n):
            raise ConfigurationError("profile shape does not match (class_count, n)")
        norms = np.linalg.norm(self.bundles, axis=1)
        if np.any(np.abs(norms - 1.0) > BUNDLE_NORM_TOL):
            raise TrainingError("bundles are not unit-norm")
        if np.any(np.abs(self.profiles) > 1.0 + BUNDLE_NORM_TOL):
            raise TrainingError("profile coordinates outside [-1, 1]")

    @property
    def bundle_count(self) -> int:
        return int(self.bundles.shape[0])

    @property
    def class_count(self) -> int:
        return int(self.profiles.shape[0])

    @property
    def hyper_dim(self) -> int:
        return int(self.bundles.shape[1])


def build_bundles(protos: PrototypeModel, cb: Codebook) -> np.ndarray:
    """Weighted superposition M_j = normalize(sum_c g(B[c,j]) H_c).

    Raises TrainingError naming the bundle index if any superposition is the
    zero vector (e.g. a codebook column of all zeros).
    """
    if protos.class_count != cb.class_count:
        raise ConfigurationError(
            f"prototype count {protos.class_count} != codebook rows {cb.class_count}"
        )
    weights = cb.symbol_weights()  # (C, n)
    bundles = weights.T @ protos.prototypes  # (n, D)
    norms = np.linalg.norm(bundles, axis=1)
    for j in np.flatnonzero(norms == 0.0):
        raise TrainingError(f"bundle {int(j)} is the zero vector; check codebook column")
    return bundles / norms[:, None]


def activation(model: LogHDModel, x: np.ndarray, counters: OpCounters | None = None) -> np.ndarray:
    """Cosine similarities of the encoded query against every bundle."""
    h = encode(model.encoder, x)
    if counters is not None:
        counters.similarity_ops += model.bundle_count
    return model.bundles @ h


def activation_batch(bundles: np.ndarray, encoded: np.ndarray) -> np.ndarray:
    """Activations of unit-norm encodings against unit-norm bundles."""
    return encoded @ bundles.T


def estimate_profiles(
    bundles: np.ndarray,
    data: LabeledDataset,
    encoder: EncoderSpec,
    *,
    encoded: np.ndarray | None = None,
) -> np.ndarray:
    """Per-class mean activation vectors, shape (class_count, n).

    Accumulation over samples is order-independent up to 1e-9 on the means.
    """
    if encoded is None:
        encoded = encode_batch(encoder, data.features)
    acts = activation_batch(bundles, encoded)
    profiles = np.zeros((data.class_count, bundles.shape[0]))
    for c in range(data.class_count):
        members = acts[data.labels == c]
        if members.shape[0] == 0:
            raise TrainingError(f"class {c} has no samples for profile estimation")
        profiles[c] = members.mean(axis=0)
    return profiles


def profile_distances(profiles: np.ndarray, acts: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances of activation rows to every profile."""
    diff = acts[:, None, :] - profiles[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def predict(model: LogHDModel, x: np.ndarray, counters: OpCounters | None = None) -> int:
    """Nearest-profile class in activation space; ties break to the lowest
    class index."""
    a = activation(model, x, counters)
    d = ((model.profiles - a[None, :]) ** 2).sum(axis=1)
    if counters is not None:
        counters.distance_ops += model.class_count
    return int(np.argmin(d))


def predict_batch(model: LogHDModel, features: np.ndarray) -> np.ndarray:
    """Vectorized :func:`predict` over feature rows."""
    encoded = encode_batch(model.encoder, features)
    acts = activation_batch(model.bundles, encoded)
    return np.argmin(profile_distances(model.profiles, acts), axis=1)


@dataclass(frozen=True)
class RefinementSpec:
    """Epoch count, step size, and shuffle seed for bundle refinement."""

    epochs: int = 100
    learning_rate: float = 3e-4
    shuffle_seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigurationError(
                f"learning_rate must be positive, got {self.learning_rate}"
            )


def refinement_targets(cb: Codebook) -> np.ndarray:
    """Code-implied activation targets t(s) = 2 s/(k-1) - 1, per class."""
    return 2.0 * cb.symbol_weights() - 1.0


def refine(
    model: LogHDModel,
    data: LabeledDataset,
    spec: RefinementSpec,
    *,
    refresh_profiles: bool = True,
) -> LogHDModel:
    """Perceptron-style bundle updates toward the code-implied targets.

    For each of ``spec.epochs`` passes over a fresh seeded permutation of
    the data, every sample updates every bundle:
    ``M_j <- normalize(M_j + lr * (tau_j - A_j) * phi(x))`` with
    ``A_j = cosine(M_j, phi(x))`` and ``tau_j = t(B[y, j])``. Updates within
    one sample are independent across bundles, so they are applied jointly.

    Profiles are re-estimated once after all epochs by default; pass
    ``refresh_profiles=False`` to keep the pre-refinement profiles (the
    literal profile-then-refine pipeline order, useful for ablation).
    Deterministic given the shuffle seed.
    """
    if spec.epochs == 0:
        return model
    encoded = encode_batch(model.encoder, data.features)
    targets = refinement_targets(model.codebook)  # (C, n)
    bundles = model.bundles.copy()
    lr = spec.learning_rate
    rng = np.random.default_rng(spec.shuffle_seed)
    for _ in range(spec.epochs):
        order = rng.permutation(data.sample_count)
        for i in order:
            h = encoded[i]
            acts = bundles @ h
            bundles += (lr * (targets[data.labels[i]] - acts))[:, None] * h[None, :]
            norms = np.linalg.norm(bundles, axis=1)
            if np.any(norms == 0.0):
                raise TrainingError("bundle collapsed to zero during refinement")
            bundles /= norms[:, None]
    if refresh_profiles:
        profiles = estimate_profiles(bundles, data, model.encoder, encoded=encoded)
    else:
        profiles = model.profiles
    return LogHDModel(
        bundles=bundles,
        profiles=profiles,
        codebook=model.codebook,
        encoder=model.encoder,
    )


@dataclass(frozen=True)
class MemoryReport:
    """Stored-coordinate accounting against the C x D baseline."""

    bundle_vectors: int
    bundle_coords: int
    profile_coords: int
    baseline_vectors: int
    baseline_coords: int
    fraction: float  # bundle_coords / baseline_coords
    compression_ratio: float  # baseline_vectors / bundle_vectors
    bits: int
    bundle_bytes: int
    profile_bytes: int
    total_bytes: int


def model_memory(model: LogHDModel, bits: int = 32) -> MemoryReport:
    """Footprint of the model at the given precision.

    Bundle storage (n of C vectors) drives the headline fraction n/C; the
    C x n profile coordinates are itemized separately.
    """
    n, d, c = model.bundle_count, model.hyper_dim, model.class_count
    bundle_bits = n * d * bits
    profile_bits = c * n * bits
    return MemoryReport(
        bundle_vectors=n,
        bundle_coords=n * d,
        profile_coords=c * n,
        baseline_vectors=c,
        baseline_coords=c * d,
        fraction=n / c,
        compression_ratio=c / n,
        bits=bits,
        bundle_bytes=-(-bundle_bits // 8),
        profile_bytes=-(-profile_bits // 8),
        total_bytes=-(-(bundle_bits + profile_bits) // 8),
    )
