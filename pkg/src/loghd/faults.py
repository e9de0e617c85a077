"""Seeded bit-flip injection into quantized model state, plus the
matched-memory-budget ledger.

Every stored bit of the packed image flips independently with probability
``p``. Pruned coordinates have no stored bits, so they can never flip;
quantization scales and layout metadata are exempt. Test inputs are never
corrupted: only the stored model state is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import min_bundles
from .compression import QuantizedState, state_with_payload
from .core import LabeledDataset
from .errors import ConfigurationError

DEFAULT_TRIALS = 20


@dataclass(frozen=True)
class FaultSpec:
    """Per-bit flip probability, base seed, and repetition count."""

    flip_probability: float
    seed: int = 0
    target: str = "all_stored_state"
    trials: int = DEFAULT_TRIALS

    def __post_init__(self) -> None:
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ConfigurationError(
                f"flip_probability must be in [0, 1], got {self.flip_probability}"
            )
        if self.target != "all_stored_state":
            raise ConfigurationError(f"unsupported fault target {self.target!r}")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")


def inject(state: QuantizedState, spec: FaultSpec) -> QuantizedState:
    """Flip each stored bit independently with probability ``p``.

    Returns a fresh state; the input is never modified. Padding bits in the
    final payload byte are not stored state and never flip. Deterministic
    given ``spec.seed``.
    """
    bits = state.unpack_bits()
    rng = np.random.default_rng(spec.seed)
    flips = rng.random(state.total_bits) < spec.flip_probability
    flipped = np.bitwise_xor(bits, flips.astype(np.uint8))
    return state_with_payload(state, np.packbits(flipped, bitorder="little"))


def trial_seed(spec: FaultSpec, trial: int) -> int:
    """Consecutive sub-seed for one trial of a fault configuration."""
    return spec.seed + trial


def evaluate_under_faults(
    artifact,
    data: LabeledDataset,
    spec: FaultSpec,
    *,
    encoded: np.ndarray | None = None,
) -> np.ndarray:
    """Accuracy per trial: inject -> dequantize -> classify the full split.

    ``artifact`` is a :class:`loghd.methods.ModelArtifact`. The test inputs
    themselves are encoded once (clean) and reused across trials; only the
    stored model state is corrupted. Trials use consecutive sub-seeds and are
    independent, so results do not depend on evaluation order.
    """
    from .core import encode_batch  # local import to keep module deps one-way

    if encoded is None:
        encoded = encode_batch(artifact.encoder, data.features)
    accuracies = np.zeros(spec.trials)
    for t in range(spec.trials):
        shot = inject(
            artifact.state,
            FaultSpec(
                flip_probability=spec.flip_probability,
                seed=trial_seed(spec, t),
                trials=1,
            ),
        )
        preds = artifact.predict_encoded(encoded, state=shot)
        accuracies[t] = float(np.mean(preds == data.labels))
    return accuracies


@dataclass(frozen=True)
class BudgetEntry:
    """One (method, parameters) point satisfying a memory budget, or an
    explicit infeasibility marker."""

    method: str
    budget: float
    feasible: bool
    k: int | None = None
    n: int | None = None
    sparsity: float | None = None
    note: str = ""


def matched_budget_configs(
    class_count: int,
    hyper_dim: int,
    k: int,
    budget: float,
    *,
    redundancy: int = 1,
) -> list[BudgetEntry]:
    """Method configurations whose main stored-vector footprint fits
    ``budget`` (fraction of the conventional C x D baseline).

    Class-axis entry: the largest n with n/C <= budget, requiring
    n >= ceil(log_k C); marked infeasible when even the minimum n does not
    fit. Feature-axis entry: the smallest sparsity with (1-S) <= budget.
    Hybrid entry: n = ceil(log_k C) + redundancy bundles pruned down so that
    n*(1-S)/C <= budget. Infeasibility is data, not an error.
    """
    if not 0.0 < budget <= 1.0:
        raise ConfigurationError(f"budget must be in (0, 1], got {budget}")
    entries: list[BudgetEntry] = []
    n_min = min_bundles(class_count, k)
    n_max = int(np.floor(budget * class_count + 1e-9))
    if n_max >= n_min:
        entries.append(
            BudgetEntry(method="loghd", budget=budget, feasible=True, k=k, n=n_max)
        )
    else:
        entries.append(
            BudgetEntry(
                method="loghd",
                budget=budget,
                feasible=False,
                k=k,
                note=f"minimum n={n_min} exceeds budget ({n_min}/{class_count} > {budget})",
            )
        )
    sparsity = 1.0 - budget
    retained = int(np.rint(budget * hyper_dim))
    if retained >= 1:
        entries.append(
            BudgetEntry(
                method="sparsehd", budget=budget, feasible=True, sparsity=sparsity
            )
        )
    else:
        entries.append(
            BudgetEntry(
                method="sparsehd",
                budget=budget,
                feasible=False,
                note="no dimensions retained at this budget",
            )
        )
    n_hybrid = n_min + redundancy
    if n_hybrid <= class_count:
        s_hybrid = max(0.0, 1.0 - budget * class_count / n_hybrid)
        if int(np.rint((1.0 - s_hybrid) * hyper_dim)) >= 1 and s_hybrid < 1.0:
            entries.append(
                BudgetEntry(
                    method="hybrid",
                    budget=budget,
                    feasible=True,
                    k=k,
                    n=n_hybrid,
                    sparsity=s_hybrid,
                )
            )
        else:
            entries.append(
                BudgetEntry(
                    method="hybrid",
                    budget=budget,
                    feasible=False,
                    k=k,
                    n=n_hybrid,
                    note="required sparsity leaves no retained dimensions",
                )
            )
    else:
        entries.append(
            BudgetEntry(
                method="hybrid",
                budget=budget,
                feasible=False,
                k=k,
                note=f"n={n_hybrid} exceeds class count",
            )
        )
    return entries


def min_budget_fraction(class_count: int, k: int) -> float:
    """Smallest feasible class-axis budget fraction ceil(log_k C) / C."""
    return min_bundles(class_count, k) / class_count


@dataclass(frozen=True)
class BudgetLedger:
    """Exact stored-state accounting for one quantized model."""

    baseline_coords: int  # C * D
    model_coords: int  # all stored (retained) coordinates, profiles included
    main_coords: int  # prototype/bundle coordinates only
    profile_coords: int
    fraction: float  # model_coords / baseline_coords
    main_fraction: float  # main_coords / baseline_coords
    bits: int
    total_bits: int
    payload_bytes: int


def budget_ledger(state: QuantizedState, class_count: int, hyper_dim: int) -> BudgetLedger:
    """Ledger derived from the packed image itself, never from a request."""
    baseline = class_count * hyper_dim
    main = state.layouts[0].retained_count
    profile = sum(l.retained_count for l in state.layouts[1:])
    stored = main + profile
    return BudgetLedger(
        baseline_coords=baseline,
        model_coords=stored,
        main_coords=main,
        profile_coords=profile,
        fraction=stored / baseline,
        main_fraction=main / baseline,
        bits=state.bits,
        total_bits=state.total_bits,
        payload_bytes=state.payload_bytes,
    )
