"""Experiment orchestration: plans, sweeps over (method, budget, precision,
flip probability), CSV emission, and the binary model-file format.

A plan is fully determined by its fields plus one master seed; every derived
seed comes from a stable hash of the master seed and a purpose string, so
re-running the same plan yields a byte-identical CSV.
"""

from __future__ import annotations

import base64
import dataclasses
import hashlib
import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codebook import Codebook, CodebookSpec, min_bundles
from .compression import QuantizedState, QuantSpec, TensorLayout
from .core import EncoderSpec, LabeledDataset, train_prototypes, encode_batch
from .datasets import DatasetSpec, gen_blobs, load_dataset, scale_blob_pair
from .errors import ConfigurationError, FormatError
from .faults import FaultSpec, budget_ledger, evaluate_under_faults, matched_budget_configs
from .methods import (
    BUNDLE_METHODS,
    METHODS,
    FeatureScaler,
    ModelArtifact,
    build_artifact,
    build_loghd_model,
)
from .model import RefinementSpec

MAGIC = b"LOGHD1"

DEFAULT_P_GRID = (0.0, 0.1, 0.2, 0.4, 0.6, 0.8)


def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit seed from the master seed and a purpose key."""
    text = f"{master}|" + "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything a sweep needs; serializable to/from a single JSON file."""

    dataset: dict
    methods: tuple = tuple(METHODS)
    hyper_dim: int = 4096
    alphabet_sizes: tuple = (2, 3)
    redundancy: int = 1
    bundles: int | None = None  # explicit n; overrides redundancy when set
    sparsity_grid: tuple = ()
    precisions: tuple = (8,)
    flip_probabilities: tuple = DEFAULT_P_GRID
    budget_fractions: tuple = ()
    trials: int = 20
    seed: int = 0
    refine_epochs: int = 100
    learning_rate: float = 3e-4
    capacity_alpha: float = 1.0
    refresh_profiles: bool = True

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentPlan":
        with open(path) as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentPlan":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown plan fields: {sorted(unknown)}")
        coerced = dict(raw)
        for name in (
            "methods",
            "alphabet_sizes",
            "sparsity_grid",
            "precisions",
            "flip_probabilities",
            "budget_fractions",
        ):
            if name in coerced and coerced[name] is not None:
                coerced[name] = tuple(coerced[name])
        plan = cls(**coerced)
        for m in plan.methods:
            if m not in METHODS:
                raise ConfigurationError(f"unknown method {m!r} in plan")
        return plan

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out


@dataclass(frozen=True)
class SweepRow:
    """One (configuration, trial) record of a sweep."""

    dataset: str
    method: str
    k: int | None
    n: int | None
    sparsity: float | None
    bits: int | None
    p: float | None
    budget_fraction: float | None
    trial: int | None
    accuracy: float | None
    clean_accuracy: float | None
    seed: int | None
    status: str = "ok"


CSV_COLUMNS = (
    "dataset",
    "method",
    "k",
    "n",
    "sparsity",
    "bits",
    "p",
    "budget_fraction",
    "trial",
    "accuracy",
    "clean_accuracy",
    "seed",
    "status",
)

_INT_COLUMNS = {"k", "n", "bits", "trial", "seed"}
_FLOAT_COLUMNS = {"sparsity", "p", "budget_fraction", "accuracy", "clean_accuracy"}


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def emit_results(results: list[SweepRow], path: str | Path) -> None:
    """Write rows in a stable column order with 6-significant-digit floats.

    Refuses to write an empty sweep.
    """
    if not results:
        raise ConfigurationError("refusing to emit an empty sweep result")
    lines = [",".join(CSV_COLUMNS)]
    for row in results:
        record = dataclasses.asdict(row)
        lines.append(",".join(_format_cell(record[col]) for col in CSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def read_results(path: str | Path) -> list[SweepRow]:
    """Parse a CSV produced by :func:`emit_results` back into rows."""
    text = Path(path).read_text().splitlines()
    if not text or text[0].split(",") != list(CSV_COLUMNS):
        raise FormatError(f"{path}: not a sweep result file")
    rows = []
    for line in text[1:]:
        cells = line.split(",")
        record = {}
        for col, cell in zip(CSV_COLUMNS, cells):
            if cell == "":
                record[col] = None
            elif col in _INT_COLUMNS:
                record[col] = int(cell)
            elif col in _FLOAT_COLUMNS:
                record[col] = float(cell)
            else:
                record[col] = cell
        rows.append(SweepRow(**record))
    return rows


@dataclass(frozen=True)
class PlanCell:
    method: str
    k: int | None
    n: int | None
    sparsity: float
    budget: float | None
    feasible: bool
    note: str = ""


def _resolve_cells(plan: ExperimentPlan, class_count: int) -> list[PlanCell]:
    """Expand a plan into concrete (method, k, n, S) cells."""
    cells: list[PlanCell] = []
    if "conventional" in plan.methods:
        cells.append(
            PlanCell("conventional", None, None, 0.0, 1.0, True)
        )
    explicit_n = plan.bundles
    for x in plan.budget_fractions:
        for method in plan.methods:
            if method == "conventional":
                continue
            if method == "sparsehd":
                entry = next(
                    e
                    for e in matched_budget_configs(
                        class_count, plan.hyper_dim, plan.alphabet_sizes[0], x
                    )
                    if e.method == "sparsehd"
                )
                cells.append(
                    PlanCell(
                        "sparsehd",
                        None,
                        None,
                        entry.sparsity if entry.feasible else 1.0,
                        x,
                        entry.feasible,
                        entry.note,
                    )
                )
                continue
            for k in plan.alphabet_sizes:
                entries = matched_budget_configs(
                    class_count, plan.hyper_dim, k, x, redundancy=plan.redundancy
                )
                entry = next(e for e in entries if e.method == method)
                cells.append(
                    PlanCell(
                        method,
                        k,
                        entry.n,
                        entry.sparsity or 0.0,
                        x,
                        entry.feasible,
                        entry.note,
                    )
                )
    if plan.sparsity_grid:
        k = plan.alphabet_sizes[0]
        n = explicit_n if explicit_n is not None else min_bundles(class_count, k) + plan.redundancy
        for s in plan.sparsity_grid:
            method = "hybrid" if "hybrid" in plan.methods else "sparsehd"
            if method == "hybrid":
                cells.append(PlanCell("hybrid", k, n, float(s), None, True))
            else:
                cells.append(PlanCell("sparsehd", None, None, float(s), None, True))
    if not plan.budget_fractions and not plan.sparsity_grid:
        for method in plan.methods:
            if method == "conventional":
                continue
            if method == "sparsehd":
                cells.append(PlanCell("sparsehd", None, None, 0.5, None, True))
                continue
            for k in plan.alphabet_sizes:
                n = explicit_n if explicit_n is not None else min_bundles(class_count, k) + plan.redundancy
                s = 0.5 if method == "hybrid" else 0.0
                cells.append(PlanCell(method, k, n, s, None, True))
    return cells


def _resolve_dataset(plan: ExperimentPlan):
    info = dict(plan.dataset)
    kind = info.pop("kind", "csv")
    if kind == "blobs":
        name = info.pop("name", "blobs")
        seed = info.pop("seed", None)
        if seed is None:
            seed = derive_seed(plan.seed, "blobs")
        train, test = gen_blobs(
            info.pop("classes", 8),
            info.pop("features", 16),
            info.pop("train_per_class", 100),
            info.pop("test_per_class", 50),
            seed=seed,
            center_spread=info.pop("center_spread", 3.0),
            cluster_std=info.pop("cluster_std", 1.0),
        )
        if info:
            raise ConfigurationError(f"unknown blob dataset fields: {sorted(info)}")
        train, test, scaler = scale_blob_pair(train, test)
        return name, train, test, scaler, np.arange(train.class_count)
    if kind == "csv":
        spec = DatasetSpec(
            name=info.get("name", "dataset"),
            train_path=info["train"],
            test_path=info["test"],
            feature_count=info.get("feature_count"),
            class_count=info.get("class_count"),
        )
        loaded = load_dataset(spec)
        return spec.name, loaded.train, loaded.test, loaded.scaler, loaded.label_values
    raise ConfigurationError(f"unknown dataset kind {kind!r}")


def run_plan(plan: ExperimentPlan) -> list[SweepRow]:
    """Execute a plan: shared encoder and prototypes, then every cell.

    Prototypes are trained once per plan; every method derives from the same
    encoder and prototype set. Budget fractions in emitted rows are
    recomputed from the packed payload, never echoed from the request.
    Infeasible (method, budget) pairs become status="infeasible" rows.
    """
    name, train, test, scaler, label_values = _resolve_dataset(plan)
    enc_spec = EncoderSpec(
        input_dim=train.feature_count,
        hyper_dim=plan.hyper_dim,
        seed=derive_seed(plan.seed, "encoder"),
        nonlinearity="cosine",
    )
    protos = train_prototypes(train, enc_spec)
    enc_train = encode_batch(enc_spec, train.features)
    enc_test = encode_batch(enc_spec, test.features)
    cells = _resolve_cells(plan, train.class_count)

    rows: list[SweepRow] = []
    loghd_cache: dict[tuple[int, int], object] = {}
    for cell in cells:
        if not cell.feasible:
            rows.append(
                SweepRow(
                    dataset=name,
                    method=cell.method,
                    k=cell.k,
                    n=cell.n,
                    sparsity=None,
                    bits=None,
                    p=None,
                    budget_fraction=cell.budget,
                    trial=None,
                    accuracy=None,
                    clean_accuracy=None,
                    seed=None,
                    status="infeasible",
                )
            )
            continue
        base = None
        if cell.method in BUNDLE_METHODS:
            key = (cell.k, cell.n)
            base = loghd_cache.get(key)
            if base is None:
                base = build_loghd_model(
                    protos,
                    train,
                    alphabet_size=cell.k,
                    code_length=cell.n,
                    codebook_seed=derive_seed(plan.seed, "codebook", cell.k, cell.n),
                    alpha=plan.capacity_alpha,
                    refinement=RefinementSpec(
                        epochs=plan.refine_epochs,
                        learning_rate=plan.learning_rate,
                        shuffle_seed=derive_seed(plan.seed, "refine", cell.k, cell.n),
                    ),
                    refresh_profiles=plan.refresh_profiles,
                    encoded=enc_train,
                )
                loghd_cache[key] = base
        for bits in plan.precisions:
            artifact = build_artifact(
                cell.method,
                protos,
                train,
                QuantSpec(bits=bits),
                sparsity=cell.sparsity,
                scaler=scaler,
                label_values=label_values,
                encoded=enc_train,
                loghd_base=base,
            )
            ledger = budget_ledger(artifact.state, train.class_count, plan.hyper_dim)
            clean = artifact.accuracy(test, encoded=enc_test)
            for p in plan.flip_probabilities:
                fault_seed = derive_seed(
                    plan.seed, "faults", cell.method, cell.k, cell.n, cell.sparsity, bits, p
                )
                spec = FaultSpec(flip_probability=p, seed=fault_seed, trials=plan.trials)
                accs = evaluate_under_faults(artifact, test, spec, encoded=enc_test)
                for t, acc in enumerate(accs):
                    rows.append(
                        SweepRow(
                            dataset=name,
                            method=cell.method,
                            k=cell.k,
                            n=cell.n,
                            sparsity=cell.sparsity,
                            bits=bits,
                            p=p,
                            budget_fraction=ledger.fraction,
                            trial=t,
                            accuracy=float(acc),
                            clean_accuracy=clean,
                            seed=fault_seed + t,
                        )
                    )
    return rows


# ---------------------------------------------------------------------------
# Model file format: MAGIC | u32 header_len | header JSON | u32 payload_len |
# payload | u32 crc32(payload). Header carries method, shapes, encoder spec,
# codebook, tensor layouts, and the feature scaler.
# ---------------------------------------------------------------------------


def _mask_to_b64(mask: np.ndarray | None) -> str | None:
    if mask is None:
        return None
    packed = np.packbits(mask.astype(np.uint8), bitorder="little")
    return base64.b64encode(packed.tobytes()).decode("ascii")


def _mask_from_b64(text: str | None, length: int) -> np.ndarray | None:
    if text is None:
        return None
    packed = np.frombuffer(base64.b64decode(text), dtype=np.uint8)
    return np.unpackbits(packed, count=length, bitorder="little").astype(bool)


def _header_dict(artifact: ModelArtifact) -> dict:
    cb = artifact.codebook
    header = {
        "format": 1,
        "method": artifact.method,
        "class_count": artifact.class_count,
        "hyper_dim": artifact.hyper_dim,
        "bits": artifact.bits,
        "sparsity": artifact.sparsity,
        "n": artifact.bundle_count,
        "k": artifact.alphabet_size,
        "encoder": dataclasses.asdict(artifact.encoder),
        "codebook": None,
        "scaler": None,
        "label_values": None
        if artifact.label_values is None
        else [int(v) for v in artifact.label_values],
        "layouts": [
            {
                "name": l.name,
                "shape": list(l.shape),
                "scale": l.scale,
                "mask": _mask_to_b64(l.mask),
                "bit_offset": l.bit_offset,
                "bit_length": l.bit_length,
            }
            for l in artifact.state.layouts
        ],
        "total_bits": artifact.state.total_bits,
    }
    if cb is not None:
        header["codebook"] = {
            "rows": cb.rows.tolist(),
            "spec": dataclasses.asdict(cb.spec),
            "final_loads": cb.final_loads.tolist(),
        }
    if artifact.scaler is not None:
        header["scaler"] = {
            "minimum": artifact.scaler.minimum.tolist(),
            "span": artifact.scaler.span.tolist(),
        }
    return header


def save_model(path: str | Path, artifact: ModelArtifact) -> None:
    """Serialize an artifact; loading reproduces predictions bit-exactly."""
    header = json.dumps(_header_dict(artifact), sort_keys=True).encode("utf-8")
    payload = artifact.state.payload.tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def load_model(path: str | Path) -> ModelArtifact:
    """Read and verify a model file; raises FormatError on any corruption."""
    blob = Path(path).read_bytes()
    if len(blob) < len(MAGIC) + 4:
        raise FormatError(f"{path}: truncated model file")
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic (expected {MAGIC.decode()})")
    pos = len(MAGIC)
    (header_len,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if len(blob) < pos + header_len + 4:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt header ({exc})")
    pos += header_len
    (payload_len,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if len(blob) != pos + payload_len + 4:
        raise FormatError(f"{path}: truncated or oversized payload section")
    payload = blob[pos : pos + payload_len]
    (crc,) = struct.unpack_from("<I", blob, pos + payload_len)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise FormatError(f"{path}: payload checksum mismatch")
    if header.get("format") != 1:
        raise FormatError(f"{path}: unsupported format version {header.get('format')}")

    layouts = tuple(
        TensorLayout(
            name=l["name"],
            shape=tuple(l["shape"]),
            scale=float(l["scale"]),
            mask=_mask_from_b64(l["mask"], int(np.prod(l["shape"]))),
            bit_offset=l["bit_offset"],
            bit_length=l["bit_length"],
        )
        for l in header["layouts"]
    )
    total_bits = header["total_bits"]
    expected_bytes = -(-total_bits // 8)
    if payload_len != expected_bytes:
        raise FormatError(
            f"{path}: payload is {payload_len} bytes but layouts need {expected_bytes}"
        )
    state = QuantizedState(
        bits=header["bits"],
        layouts=layouts,
        payload=np.frombuffer(payload, dtype=np.uint8).copy(),
        total_bits=total_bits,
    )
    codebook = None
    if header["codebook"] is not None:
        cb = header["codebook"]
        codebook = Codebook(
            rows=np.array(cb["rows"], dtype=np.int64),
            spec=CodebookSpec(**cb["spec"]),
            final_loads=np.array(cb["final_loads"]),
        )
    scaler = None
    if header["scaler"] is not None:
        scaler = FeatureScaler(
            minimum=np.array(header["scaler"]["minimum"]),
            span=np.array(header["scaler"]["span"]),
        )
    label_values = header.get("label_values")
    return ModelArtifact(
        method=header["method"],
        class_count=header["class_count"],
        hyper_dim=header["hyper_dim"],
        encoder=EncoderSpec(**header["encoder"]),
        state=state,
        codebook=codebook,
        sparsity=header["sparsity"],
        scaler=scaler,
        label_values=None if label_values is None else np.array(label_values, dtype=np.int64),
    )
