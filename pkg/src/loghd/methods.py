"""Method builders and the packed, evaluable model artifact.

Every method (conventional, loghd, sparsehd, hybrid) reduces to the same
shape at evaluation time: a quantized state plus enough metadata to rebuild
float tensors and classify. Predictions tolerate corrupted tensors (bit
flips can zero a vector), guarding norms instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .codebook import Codebook, CodebookSpec, build_codebook
from .compression import (
    QuantizedState,
    QuantSpec,
    SparsityMask,
    hybridize,
    quantize_tensors,
    sparsify,
)
from .core import EncoderSpec, LabeledDataset, PrototypeModel, encode_batch
from .errors import ConfigurationError
from .model import (
    LogHDModel,
    RefinementSpec,
    build_bundles,
    estimate_profiles,
    profile_distances,
    refine,
)

METHODS = ("conventional", "loghd", "sparsehd", "hybrid")

PROTOTYPE_METHODS = ("conventional", "sparsehd")
BUNDLE_METHODS = ("loghd", "hybrid")


@dataclass(frozen=True, eq=False)
class FeatureScaler:
    """Per-feature min-max statistics from a training split."""

    minimum: np.ndarray
    span: np.ndarray  # max - min; zero-span features map to 0

    def apply(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        span = np.where(self.span == 0.0, 1.0, self.span)
        scaled = (features - self.minimum) / span
        return np.where(self.span == 0.0, 0.0, scaled)


def _safe_unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    norms = np.where(norms == 0.0, 1.0, norms)
    return vectors / norms[:, None]


@dataclass(frozen=True, eq=False)
class ModelArtifact:
    """A packed model: quantized stored state plus rebuild metadata."""

    method: str
    class_count: int
    hyper_dim: int
    encoder: EncoderSpec
    state: QuantizedState
    codebook: Codebook | None = None
    sparsity: float = 0.0
    scaler: FeatureScaler | None = None
    label_values: np.ndarray | None = None  # original label per internal index

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.method in BUNDLE_METHODS and self.codebook is None:
            raise ConfigurationError(f"method {self.method!r} requires a codebook")

    @property
    def bits(self) -> int:
        return self.state.bits

    @property
    def bundle_count(self) -> int | None:
        return None if self.codebook is None else self.codebook.code_length

    @property
    def alphabet_size(self) -> int | None:
        return None if self.codebook is None else self.codebook.spec.alphabet_size

    def with_state(self, state: QuantizedState) -> "ModelArtifact":
        return replace(self, state=state)

    def predict_encoded(
        self, encoded: np.ndarray, state: QuantizedState | None = None
    ) -> np.ndarray:
        """Classify unit-norm encodings using (possibly corrupted) state."""
        from .compression import dequantize

        tensors = dequantize(state if state is not None else self.state)
        if self.method in PROTOTYPE_METHODS:
            prototypes = _safe_unit_rows(tensors["prototypes"])
            return np.argmax(encoded @ prototypes.T, axis=1)
        bundles = _safe_unit_rows(tensors["bundles"])
        acts = encoded @ bundles.T
        return np.argmin(profile_distances(tensors["profiles"], acts), axis=1)

    def predict_batch(self, features: np.ndarray) -> np.ndarray:
        """Classify feature rows already normalized the way training data was."""
        return self.predict_encoded(encode_batch(self.encoder, features))

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        """Classify raw feature rows, applying the stored feature scaler."""
        if self.scaler is not None:
            features = self.scaler.apply(features)
        return self.predict_batch(features)

    def internal_labels(self, raw_labels: np.ndarray) -> np.ndarray:
        """Map original dataset labels to the model's 0..C-1 indices."""
        if self.label_values is None:
            return np.asarray(raw_labels, dtype=np.int64)
        positions = np.searchsorted(self.label_values, raw_labels)
        if np.any(positions >= self.label_values.size) or np.any(
            self.label_values[np.clip(positions, 0, self.label_values.size - 1)]
            != raw_labels
        ):
            raise ValueError("labels not seen during training")
        return positions.astype(np.int64)

    def accuracy(self, data: LabeledDataset, encoded: np.ndarray | None = None) -> float:
        if encoded is None:
            encoded = encode_batch(self.encoder, data.features)
        return float(np.mean(self.predict_encoded(encoded) == data.labels))


def build_loghd_model(
    protos: PrototypeModel,
    data: LabeledDataset,
    *,
    alphabet_size: int,
    code_length: int,
    codebook_seed: int = 0,
    alpha: float = 1.0,
    tie_epsilon: float = 1e-9,
    candidate_pool_cap: int = 4096,
    refinement: RefinementSpec | None = None,
    refresh_profiles: bool = True,
    encoded: np.ndarray | None = None,
) -> LogHDModel:
    """Full class-axis pipeline: codebook, bundles, profiles, refinement."""
    cb_spec = CodebookSpec(
        class_count=protos.class_count,
        alphabet_size=alphabet_size,
        code_length=code_length,
        alpha=alpha,
        tie_epsilon=tie_epsilon,
        candidate_pool_cap=candidate_pool_cap,
        seed=codebook_seed,
    )
    cb = build_codebook(cb_spec)
    bundles = build_bundles(protos, cb)
    if encoded is None:
        encoded = encode_batch(protos.encoder, data.features)
    profiles = estimate_profiles(bundles, data, protos.encoder, encoded=encoded)
    model = LogHDModel(
        bundles=bundles, profiles=profiles, codebook=cb, encoder=protos.encoder
    )
    if refinement is not None and refinement.epochs > 0:
        model = refine(model, data, refinement, refresh_profiles=refresh_profiles)
    return model


def _flat_mask(mask: SparsityMask | None, rows: int) -> np.ndarray | None:
    """Row-major flat mask repeating the dimension mask for every vector."""
    if mask is None or mask.sparsity == 0.0:
        return None
    return np.tile(mask.retained, rows)


def pack_prototype_artifact(
    model: PrototypeModel,
    qspec: QuantSpec,
    *,
    method: str = "conventional",
    mask: SparsityMask | None = None,
    scaler: FeatureScaler | None = None,
    label_values: np.ndarray | None = None,
) -> ModelArtifact:
    """Quantize a (possibly sparsified) prototype model into an artifact."""
    state = quantize_tensors(
        [("prototypes", model.prototypes, _flat_mask(mask, model.class_count))], qspec
    )
    return ModelArtifact(
        method=method,
        class_count=model.class_count,
        hyper_dim=model.hyper_dim,
        encoder=model.encoder,
        state=state,
        sparsity=0.0 if mask is None else mask.sparsity,
        scaler=scaler,
        label_values=label_values,
    )


def pack_loghd_artifact(
    model: LogHDModel,
    qspec: QuantSpec,
    *,
    method: str = "loghd",
    mask: SparsityMask | None = None,
    scaler: FeatureScaler | None = None,
    label_values: np.ndarray | None = None,
) -> ModelArtifact:
    """Quantize a LogHD (or hybrid) model: bundles first, then profiles."""
    state = quantize_tensors(
        [
            ("bundles", model.bundles, _flat_mask(mask, model.bundle_count)),
            ("profiles", model.profiles, None),
        ],
        qspec,
    )
    return ModelArtifact(
        method=method,
        class_count=model.class_count,
        hyper_dim=model.hyper_dim,
        encoder=model.encoder,
        state=state,
        codebook=model.codebook,
        sparsity=0.0 if mask is None else mask.sparsity,
        scaler=scaler,
        label_values=label_values,
    )


def build_artifact(
    method: str,
    protos: PrototypeModel,
    data: LabeledDataset,
    qspec: QuantSpec,
    *,
    alphabet_size: int = 2,
    code_length: int | None = None,
    sparsity: float = 0.0,
    codebook_seed: int = 0,
    refinement: RefinementSpec | None = None,
    scaler: FeatureScaler | None = None,
    label_values: np.ndarray | None = None,
    encoded: np.ndarray | None = None,
    loghd_base: LogHDModel | None = None,
) -> ModelArtifact:
    """One-stop constructor used by the harness and CLI.

    ``loghd_base`` lets callers reuse an already-refined class-axis model
    when sweeping sparsity or precision around it.
    """
    if method == "conventional":
        return pack_prototype_artifact(
            protos, qspec, scaler=scaler, label_values=label_values
        )
    if method == "sparsehd":
        pruned, mask = sparsify(protos, sparsity)
        assert isinstance(pruned, PrototypeModel)
        return pack_prototype_artifact(
            pruned,
            qspec,
            method="sparsehd",
            mask=mask,
            scaler=scaler,
            label_values=label_values,
        )
    if method in BUNDLE_METHODS:
        if loghd_base is None:
            if code_length is None:
                raise ConfigurationError("code_length is required for class-axis methods")
            loghd_base = build_loghd_model(
                protos,
                data,
                alphabet_size=alphabet_size,
                code_length=code_length,
                codebook_seed=codebook_seed,
                refinement=refinement,
                encoded=encoded,
            )
        if method == "loghd":
            return pack_loghd_artifact(
                loghd_base, qspec, scaler=scaler, label_values=label_values
            )
        hybrid, mask = hybridize(loghd_base, data, sparsity)
        return pack_loghd_artifact(
            hybrid,
            qspec,
            method="hybrid",
            mask=mask,
            scaler=scaler,
            label_values=label_values,
        )
    raise ConfigurationError(f"unknown method {method!r}")
