"""Unique k-ary codebook construction with minimax-load greedy selection.

Each class receives a distinct length-n code over symbols 0..k-1. Symbol s
contributes weight g(s) = s/(k-1) to its bundle, and a nondecreasing
capacity surrogate U(w) = w**alpha turns per-bundle contributions into
loads. Codes are picked greedily, one class at a time, minimizing the
worst-case updated load with a tiny random tie-break term.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, LogHDError

# Uniform-sampling rounds before giving up on refilling a candidate pool.
_POOL_SAMPLING_ROUNDS = 64


def symbol_weight(s: int, k: int) -> float:
    """Contribution strength g(s) = s/(k-1) of symbol s, in [0, 1]."""
    if k < 2:
        raise ValueError(f"alphabet size must be >= 2, got {k}")
    if not 0 <= s <= k - 1:
        raise ValueError(f"symbol {s} outside 0..{k - 1}")
    return s / (k - 1)


def capacity(w: float, alpha: float) -> float:
    """Capacity surrogate U(w) = w**alpha, nondecreasing for alpha > 0."""
    if w < 0:
        raise ValueError(f"weight must be nonnegative, got {w}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return float(w**alpha)


def min_bundles(class_count: int, k: int) -> int:
    """Smallest n with k**n >= class_count, i.e. ceil(log_k class_count)."""
    if class_count < 1:
        raise ConfigurationError(f"class_count must be >= 1, got {class_count}")
    if k < 2:
        raise ConfigurationError(f"alphabet size must be >= 2, got {k}")
    n = 0
    total = 1
    while total < class_count:
        total *= k
        n += 1
    return max(n, 1)


@dataclass(frozen=True, eq=False)
class CodebookSpec:
    """Configuration of the greedy codebook builder."""

    class_count: int
    alphabet_size: int
    code_length: int
    alpha: float = 1.0
    tie_epsilon: float = 1e-9
    candidate_pool_cap: int = 4096
    seed: int = 0

    def __post_init__(self) -> None:
        if self.class_count < 1:
            raise ConfigurationError(f"class_count must be >= 1, got {self.class_count}")
        if self.alphabet_size < 2:
            raise ConfigurationError(
                f"alphabet_size must be >= 2, got {self.alphabet_size}"
            )
        if self.code_length < 1:
            raise ConfigurationError(f"code_length must be >= 1, got {self.code_length}")
        if self.alpha <= 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")
        if self.tie_epsilon <= 0:
            raise ConfigurationError(
                f"tie_epsilon must be positive, got {self.tie_epsilon}"
            )
        if self.candidate_pool_cap < 1:
            raise ConfigurationError("candidate_pool_cap must be >= 1")
        if self.code_space < self.class_count:
            raise ConfigurationError(
                f"infeasible codebook: {self.alphabet_size}**{self.code_length} = "
                f"{self.code_space} < {self.class_count} classes"
            )
        if self.code_length < min_bundles(self.class_count, self.alphabet_size):
            raise ConfigurationError(
                f"code_length {self.code_length} below minimum "
                f"{min_bundles(self.class_count, self.alphabet_size)}"
            )

    @property
    def code_space(self) -> int:
        return self.alphabet_size**self.code_length


@dataclass(frozen=True, eq=False)
class Codebook:
    """Assigned codes (one row per class) plus the final per-bundle loads."""

    rows: np.ndarray  # (class_count, code_length) ints in 0..k-1
    spec: CodebookSpec
    final_loads: np.ndarray  # (code_length,), floats

    @classmethod
    def from_rows(cls, rows: np.ndarray, spec: CodebookSpec) -> "Codebook":
        """Build a codebook from explicit rows, validating uniqueness."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.shape != (spec.class_count, spec.code_length):
            raise ConfigurationError(
                f"rows shape {rows.shape} does not match spec "
                f"({spec.class_count}, {spec.code_length})"
            )
        if rows.min() < 0 or rows.max() > spec.alphabet_size - 1:
            raise ConfigurationError("row symbols outside 0..k-1")
        if len({tuple(r) for r in rows}) != spec.class_count:
            raise ConfigurationError("codebook rows are not pairwise distinct")
        loads = _accumulate_loads(rows, spec.alphabet_size, spec.alpha)
        return cls(rows=rows, spec=spec, final_loads=loads)

    @property
    def class_count(self) -> int:
        return int(self.rows.shape[0])

    @property
    def code_length(self) -> int:
        return int(self.rows.shape[1])

    def symbol_weights(self) -> np.ndarray:
        """Per-entry g(B[c, j]) matrix, shape (class_count, code_length)."""
        return self.rows / (self.spec.alphabet_size - 1)


def _all_codes(k: int, n: int) -> np.ndarray:
    """All k**n codes in lexicographic order, shape (k**n, n)."""
    return np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)


def _accumulate_loads(rows: np.ndarray, k: int, alpha: float) -> np.ndarray:
    # Same accumulation order as the greedy loop, so recomputed loads match
    # the stored ones bit for bit.
    loads = np.zeros(rows.shape[1])
    for row in rows:
        loads = loads + (row / (k - 1)) ** alpha
    return loads


def _sample_pool(
    rng: np.random.Generator,
    spec: CodebookSpec,
    assigned: set[bytes],
) -> np.ndarray:
    """Draw up to candidate_pool_cap distinct unassigned codes uniformly."""
    k, n, cap = spec.alphabet_size, spec.code_length, spec.candidate_pool_cap
    picked: list[np.ndarray] = []
    seen: set[bytes] = set()
    for _ in range(_POOL_SAMPLING_ROUNDS):
        batch = rng.integers(0, k, size=(cap, n), dtype=np.int64)
        for row in batch:
            key = row.tobytes()
            if key in seen or key in assigned:
                continue
            seen.add(key)
            picked.append(row)
            if len(picked) == cap:
                return np.array(picked)
    if not picked:
        raise LogHDError("candidate pool exhausted; could not sample an unused code")
    return np.array(picked)


def build_codebook(spec: CodebookSpec) -> Codebook:
    """Greedily assign a unique code to each class, balancing bundle loads.

    For each class, the candidate pool is either the full code space (when
    k**n <= candidate_pool_cap) or a fresh seeded uniform sample of distinct
    unused codes. The pick minimizes the worst-case updated load
    ``max_j (L_j + U(g(s_j)))``; ties fall through to the smallest total
    added load (the fair-distribution relaxation), and residual ties break
    on ``tie_epsilon * xi`` with xi ~ Unif[0,1) drawn per candidate. Loads
    are then updated and the code removed from circulation. Deterministic
    for a fixed spec (including its seed).
    """
    rng = np.random.default_rng(spec.seed)
    k, n = spec.alphabet_size, spec.code_length
    full_pool = spec.code_space <= spec.candidate_pool_cap
    all_codes = _all_codes(k, n) if full_pool else None
    available = np.ones(spec.code_space, dtype=bool) if full_pool else None
    assigned: set[bytes] = set()

    rows = np.zeros((spec.class_count, n), dtype=np.int64)
    loads = np.zeros(n)
    for c in range(spec.class_count):
        if full_pool:
            pool = all_codes[available]
        else:
            pool = _sample_pool(rng, spec, assigned)
        contrib = (pool / (k - 1)) ** spec.alpha
        worst = (loads[None, :] + contrib).max(axis=1)
        total = contrib.sum(axis=1)
        noise = spec.tie_epsilon * rng.random(pool.shape[0])
        order = np.lexsort((noise, total, worst))
        pick = int(order[0])
        row = pool[pick]
        rows[c] = row
        loads = loads + contrib[pick]
        if full_pool:
            code_id = int(np.dot(row, k ** np.arange(n - 1, -1, -1)))
            available[code_id] = False
        else:
            assigned.add(row.tobytes())
    return Codebook(rows=rows, spec=spec, final_loads=loads)


def load_profile(cb: Codebook) -> np.ndarray:
    """Recompute per-bundle loads L_j from the rows; equals final_loads."""
    return _accumulate_loads(cb.rows, cb.spec.alphabet_size, cb.spec.alpha)
