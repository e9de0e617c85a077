"""Feature-axis sparsification, post-training quantization, and the hybrid
class+feature composition.

Sparsification is dimension-wise: one mask prunes the same coordinates in
every stored vector, ranked by variance across the stored class vectors.
Quantization is symmetric uniform per tensor; codes are stored two's
complement in ``bits`` bits and packed little-endian in vector-major order.
The packed image is the canonical stored model state, and the surface that
bit-flip faults act on.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .core import LabeledDataset, PrototypeModel
from .errors import ConfigurationError, TrainingError
from .model import LogHDModel, estimate_profiles

ALLOWED_BITS = (1, 2, 4, 8)


@dataclass(frozen=True, eq=False)
class SparsityMask:
    """Boolean retention mask over the hypervector dimensions."""

    retained: np.ndarray  # (hyper_dim,) bool
    sparsity: float

    @property
    def retained_count(self) -> int:
        return int(np.count_nonzero(self.retained))

    @property
    def hyper_dim(self) -> int:
        return int(self.retained.shape[0])


def _rank_mask(vectors: np.ndarray, sparsity: float) -> SparsityMask:
    d = vectors.shape[1]
    retained_count = int(np.rint((1.0 - sparsity) * d))
    if retained_count <= 0:
        raise ConfigurationError(
            f"sparsity {sparsity} leaves no retained dimensions (D={d})"
        )
    # Saliency: variance of each coordinate across the stored class vectors.
    scores = vectors.var(axis=0)
    order = np.argsort(scores, kind="stable")
    retained = np.ones(d, dtype=bool)
    retained[order[: d - retained_count]] = False
    return SparsityMask(retained=retained, sparsity=float(sparsity))


def _prune_rows(vectors: np.ndarray, mask: SparsityMask, what: str) -> np.ndarray:
    pruned = np.where(mask.retained[None, :], vectors, 0.0)
    norms = np.linalg.norm(pruned, axis=1)
    for i in np.flatnonzero(norms == 0.0):
        raise TrainingError(f"{what} {int(i)} lost all mass under the sparsity mask")
    return pruned / norms[:, None]


def sparsify(
    model: PrototypeModel | LogHDModel, sparsity: float
) -> tuple[PrototypeModel | LogHDModel, SparsityMask]:
    """Zero the lowest-saliency fraction ``sparsity`` of dimensions.

    The same mask applies to every stored vector (dimension-wise contract);
    rows are re-normalized over the surviving coordinates. For a LogHD model
    the mask applies to the bundles only, leaving the profiles stale; use
    :func:`hybridize` to refresh them.
    """
    if not 0.0 <= sparsity < 1.0:
        raise ConfigurationError(f"sparsity must be in [0, 1), got {sparsity}")
    if isinstance(model, LogHDModel):
        vectors = model.bundles
    else:
        vectors = model.prototypes
    if sparsity == 0.0:
        mask = SparsityMask(retained=np.ones(vectors.shape[1], dtype=bool), sparsity=0.0)
        return model, mask
    mask = _rank_mask(vectors, sparsity)
    if isinstance(model, LogHDModel):
        bundles = _prune_rows(vectors, mask, "bundle")
        pruned = LogHDModel(
            bundles=bundles,
            profiles=model.profiles,
            codebook=model.codebook,
            encoder=model.encoder,
        )
        return pruned, mask
    prototypes = _prune_rows(vectors, mask, "prototype")
    return PrototypeModel(prototypes=prototypes, encoder=model.encoder), mask


def hybridize(
    model: LogHDModel, data: LabeledDataset, sparsity: float
) -> tuple[LogHDModel, SparsityMask]:
    """Sparsify the bundles, then re-estimate profiles on the training data.

    The mask never touches the profiles; they are recomputed against the
    pruned bundles so decoding stays calibrated. Stored state afterwards is
    n*(1-S)*D bundle coordinates plus C*n profile coordinates.
    """
    pruned, mask = sparsify(model, sparsity)
    if sparsity == 0.0:
        return model, mask
    assert isinstance(pruned, LogHDModel)
    profiles = estimate_profiles(pruned.bundles, data, model.encoder)
    refreshed = LogHDModel(
        bundles=pruned.bundles,
        profiles=profiles,
        codebook=model.codebook,
        encoder=model.encoder,
    )
    return refreshed, mask


@dataclass(frozen=True)
class QuantSpec:
    """Symmetric uniform post-training quantization settings."""

    bits: int
    scheme: str = "symmetric-uniform"

    def __post_init__(self) -> None:
        if self.bits not in ALLOWED_BITS:
            raise ConfigurationError(f"bits must be one of {ALLOWED_BITS}, got {self.bits}")
        if self.scheme != "symmetric-uniform":
            raise ConfigurationError(f"unsupported quantization scheme {self.scheme!r}")


@dataclass(frozen=True, eq=False)
class TensorLayout:
    """Placement of one quantized tensor inside the packed bit image."""

    name: str
    shape: tuple[int, ...]
    scale: float
    mask: np.ndarray | None  # flattened bool over the tensor, True = stored
    bit_offset: int
    bit_length: int

    @property
    def coord_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def retained_count(self) -> int:
        if self.mask is None:
            return self.coord_count
        return int(np.count_nonzero(self.mask))


@dataclass(frozen=True, eq=False)
class QuantizedState:
    """Bit-packed image of all stored model coordinates.

    ``payload`` is a little-endian packed uint8 array of exactly
    ``ceil(total_bits / 8)`` bytes; padding bits in the last byte are zero
    and are never stored state.
    """

    bits: int
    layouts: tuple[TensorLayout, ...]
    payload: np.ndarray  # uint8
    total_bits: int

    @property
    def payload_bytes(self) -> int:
        return int(self.payload.shape[0])

    def unpack_bits(self) -> np.ndarray:
        """The stored bits as a 0/1 uint8 array of length total_bits."""
        return np.unpackbits(self.payload, count=self.total_bits, bitorder="little")


def _round_half_away(a: np.ndarray) -> np.ndarray:
    return np.sign(a) * np.floor(np.abs(a) + 0.5)


def _quantize_codes(values: np.ndarray, bits: int) -> tuple[np.ndarray, float]:
    """Symmetric uniform codes for one tensor's retained coordinates."""
    if values.size == 0 or not np.any(values):
        raise ValueError("cannot quantize an all-zero tensor (scale degeneracy)")
    if bits == 1:
        scale = float(np.mean(np.abs(values)))
        codes = (values >= 0.0).astype(np.int64)  # 1 = +scale, 0 = -scale
        return codes, scale
    qmax = (1 << (bits - 1)) - 1
    scale = float(np.max(np.abs(values)) / qmax)
    codes = _round_half_away(values / scale)
    codes = np.clip(codes, -qmax, qmax).astype(np.int64)
    return codes, scale


def _codes_to_bits(codes: np.ndarray, bits: int) -> np.ndarray:
    """LSB-first bit expansion of two's-complement codes, flattened
    coordinate-major (vector-major once the tensor is row-major)."""
    unsigned = np.mod(codes, 1 << bits).astype(np.uint16)
    shifts = np.arange(bits, dtype=np.uint16)
    return ((unsigned[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _bits_to_codes(bit_slice: np.ndarray, bits: int) -> np.ndarray:
    mat = bit_slice.reshape(-1, bits).astype(np.int64)
    unsigned = (mat << np.arange(bits)).sum(axis=1)
    if bits == 1:
        return unsigned
    signed = np.where(unsigned >= (1 << (bits - 1)), unsigned - (1 << bits), unsigned)
    return signed


def quantize_tensors(
    tensors: list[tuple[str, np.ndarray, np.ndarray | None]], spec: QuantSpec
) -> QuantizedState:
    """Quantize named tensors into one packed bit image.

    Each entry is (name, array, flat_mask) where flat_mask marks stored
    coordinates over the row-major flattened array (None = store all).
    Pruned coordinates are not stored and never influence the scale.
    """
    layouts: list[TensorLayout] = []
    all_bits: list[np.ndarray] = []
    offset = 0
    for name, arr, mask in tensors:
        arr = np.asarray(arr, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"tensor {name!r} contains non-finite values")
        flat = arr.ravel()
        if mask is not None:
            mask = np.asarray(mask, dtype=bool).ravel()
            if mask.shape != flat.shape:
                raise ConfigurationError(
                    f"mask length {mask.shape} does not match tensor {name!r}"
                )
            retained = flat[mask]
        else:
            retained = flat
        codes, scale = _quantize_codes(retained, spec.bits)
        bit_vec = _codes_to_bits(codes, spec.bits)
        layouts.append(
            TensorLayout(
                name=name,
                shape=tuple(arr.shape),
                scale=scale,
                mask=mask,
                bit_offset=offset,
                bit_length=int(bit_vec.shape[0]),
            )
        )
        all_bits.append(bit_vec)
        offset += int(bit_vec.shape[0])
    stream = np.concatenate(all_bits) if all_bits else np.zeros(0, dtype=np.uint8)
    payload = np.packbits(stream, bitorder="little")
    return QuantizedState(
        bits=spec.bits, layouts=tuple(layouts), payload=payload, total_bits=offset
    )


def quantize(
    coords: np.ndarray,
    spec: QuantSpec,
    *,
    mask: np.ndarray | None = None,
    name: str = "tensor",
) -> QuantizedState:
    """Quantize a single tensor; see :func:`quantize_tensors`."""
    return quantize_tensors([(name, np.asarray(coords), mask)], spec)


def dequantize(state: QuantizedState) -> dict[str, np.ndarray]:
    """Invert the packed image back to float tensors.

    Pruned coordinates come back as exact zeros. Corrupted codes (after bit
    flips) decode like any other two's-complement word.
    """
    bit_stream = state.unpack_bits()
    out: dict[str, np.ndarray] = {}
    for layout in state.layouts:
        bit_slice = bit_stream[layout.bit_offset : layout.bit_offset + layout.bit_length]
        codes = _bits_to_codes(bit_slice, state.bits)
        if state.bits == 1:
            values = np.where(codes == 1, layout.scale, -layout.scale)
        else:
            values = codes * layout.scale
        full = np.zeros(layout.coord_count)
        if layout.mask is None:
            full[:] = values
        else:
            full[layout.mask] = values
        out[layout.name] = full.reshape(layout.shape)
    return out


def state_with_payload(state: QuantizedState, payload: np.ndarray) -> QuantizedState:
    """A copy of ``state`` carrying a different (equally sized) payload."""
    if payload.shape != state.payload.shape:
        raise ConfigurationError("replacement payload has the wrong size")
    return dataclasses.replace(state, payload=payload)
