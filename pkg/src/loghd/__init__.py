"""Class-axis compression for hyperdimensional classifiers.

Replaces the C per-class prototypes of a conventional HDC model with
n >= ceil(log_k C) bundle hypervectors plus per-class activation profiles,
alongside a feature-axis sparsification baseline, post-training
quantization, and a seeded bit-flip fault-injection harness.
"""

from .codebook import (
    Codebook,
    CodebookSpec,
    build_codebook,
    capacity,
    load_profile,
    min_bundles,
    symbol_weight,
)
from .compression import (
    QuantizedState,
    QuantSpec,
    SparsityMask,
    TensorLayout,
    dequantize,
    hybridize,
    quantize,
    quantize_tensors,
    sparsify,
)
from .core import (
    Encoder,
    EncoderSpec,
    LabeledDataset,
    PrototypeModel,
    cosine,
    encode,
    encode_batch,
    predict_conventional,
    predict_conventional_batch,
    train_prototypes,
)
from .datasets import DatasetSpec, LoadedDataset, gen_blobs, load_dataset, write_csv
from .errors import (
    ConfigurationError,
    FormatError,
    IngestionError,
    LogHDError,
    TrainingError,
)
from .faults import (
    BudgetEntry,
    BudgetLedger,
    FaultSpec,
    budget_ledger,
    evaluate_under_faults,
    inject,
    matched_budget_configs,
    min_budget_fraction,
)
from .harness import (
    ExperimentPlan,
    SweepRow,
    derive_seed,
    emit_results,
    load_model,
    read_results,
    run_plan,
    save_model,
)
from .methods import (
    FeatureScaler,
    ModelArtifact,
    build_artifact,
    build_loghd_model,
    pack_loghd_artifact,
    pack_prototype_artifact,
)
from .model import (
    LogHDModel,
    MemoryReport,
    OpCounters,
    RefinementSpec,
    activation,
    build_bundles,
    estimate_profiles,
    model_memory,
    predict,
    predict_batch,
    refine,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetEntry",
    "BudgetLedger",
    "Codebook",
    "CodebookSpec",
    "ConfigurationError",
    "DatasetSpec",
    "Encoder",
    "EncoderSpec",
    "ExperimentPlan",
    "FaultSpec",
    "FeatureScaler",
    "FormatError",
    "IngestionError",
    "LabeledDataset",
    "LoadedDataset",
    "LogHDError",
    "LogHDModel",
    "MemoryReport",
    "ModelArtifact",
    "OpCounters",
    "PrototypeModel",
    "QuantSpec",
    "QuantizedState",
    "RefinementSpec",
    "SparsityMask",
    "SweepRow",
    "TensorLayout",
    "TrainingError",
    "activation",
    "budget_ledger",
    "build_artifact",
    "build_bundles",
    "build_codebook",
    "build_loghd_model",
    "capacity",
    "cosine",
    "dequantize",
    "derive_seed",
    "emit_results",
    "encode",
    "encode_batch",
    "estimate_profiles",
    "evaluate_under_faults",
    "gen_blobs",
    "hybridize",
    "inject",
    "load_dataset",
    "load_model",
    "load_profile",
    "matched_budget_configs",
    "min_budget_fraction",
    "min_bundles",
    "model_memory",
    "pack_loghd_artifact",
    "pack_prototype_artifact",
    "predict",
    "predict_batch",
    "predict_conventional",
    "predict_conventional_batch",
    "quantize",
    "quantize_tensors",
    "read_results",
    "refine",
    "run_plan",
    "save_model",
    "sparsify",
    "symbol_weight",
    "train_prototypes",
    "write_csv",
]
