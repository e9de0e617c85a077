"""Codebook construction: symbol weights, capacity, and the greedy selector."""

import itertools

import numpy as np
import pytest

from loghd.codebook import (
    Codebook,
    CodebookSpec,
    build_codebook,
    capacity,
    load_profile,
    min_bundles,
    symbol_weight,
)
from loghd.errors import ConfigurationError


def brute_force_min_max_load(class_count, k, n, alpha):
    """Exact optimum of the fair-distribution objective over all subsets."""
    best = float("inf")
    codes = list(itertools.product(range(k), repeat=n))
    for subset in itertools.combinations(codes, class_count):
        loads = [0.0] * n
        for code in subset:
            for j, s in enumerate(code):
                loads[j] += (s / (k - 1)) ** alpha
        best = min(best, max(loads))
    return best


def test_symbol_weight_endpoints_and_midpoint():
    assert symbol_weight(0, 2) == 0.0
    assert symbol_weight(0, 7) == 0.0
    assert symbol_weight(1, 2) == 1.0
    assert symbol_weight(6, 7) == 1.0
    assert symbol_weight(1, 3) == 0.5


def test_symbol_weight_domain():
    with pytest.raises(ValueError):
        symbol_weight(3, 3)
    with pytest.raises(ValueError):
        symbol_weight(-1, 3)
    with pytest.raises(ValueError):
        symbol_weight(0, 1)


def test_capacity():
    assert capacity(0.7, 1.0) == pytest.approx(0.7)
    assert capacity(0.0, 2.5) == 0.0
    assert capacity(0.5, 2.0) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        capacity(-0.1, 1.0)
    with pytest.raises(ValueError):
        capacity(0.5, 0.0)


def test_min_bundles():
    assert min_bundles(26, 3) == 3
    assert min_bundles(26, 2) == 5
    assert min_bundles(5, 2) == 3
    assert min_bundles(5, 3) == 2
    assert min_bundles(1, 2) == 1
    assert min_bundles(8, 2) == 3
    assert min_bundles(9, 2) == 4


def test_spec_feasibility():
    with pytest.raises(ConfigurationError):
        CodebookSpec(class_count=5, alphabet_size=2, code_length=2)
    with pytest.raises(ConfigurationError):
        CodebookSpec(class_count=4, alphabet_size=2, code_length=2, alpha=-1.0)
    with pytest.raises(ConfigurationError):
        CodebookSpec(class_count=4, alphabet_size=2, code_length=2, tie_epsilon=0.0)
    CodebookSpec(class_count=4, alphabet_size=2, code_length=2)  # feasible


def test_full_space_codebook_is_permutation():
    spec = CodebookSpec(class_count=4, alphabet_size=2, code_length=2, seed=5)
    cb = build_codebook(spec)
    assert sorted(tuple(r) for r in cb.rows) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_rows_unique_across_random_specs():
    rng = np.random.default_rng(0)
    for _ in range(25):
        k = int(rng.integers(2, 5))
        n = int(rng.integers(2, 6))
        cmax = min(k**n, 40)
        c = int(rng.integers(2, cmax + 1))
        if n < min_bundles(c, k):
            continue
        spec = CodebookSpec(
            class_count=c, alphabet_size=k, code_length=n, seed=int(rng.integers(1 << 31))
        )
        cb = build_codebook(spec)
        assert len({tuple(r) for r in cb.rows}) == c


def test_determinism_and_seed_sensitivity():
    spec = CodebookSpec(class_count=10, alphabet_size=3, code_length=4, seed=42)
    a = build_codebook(spec)
    b = build_codebook(spec)
    assert np.array_equal(a.rows, b.rows)
    np.testing.assert_array_equal(a.final_loads, b.final_loads)


def test_monotone_max_load_in_class_count():
    for c in range(2, 12):
        lo = build_codebook(
            CodebookSpec(class_count=c, alphabet_size=2, code_length=4, seed=3)
        )
        hi = build_codebook(
            CodebookSpec(class_count=c + 1, alphabet_size=2, code_length=4, seed=3)
        )
        assert hi.final_loads.max() >= lo.final_loads.max()


def test_load_profile_matches_stored_exactly():
    for seed in range(5):
        spec = CodebookSpec(class_count=9, alphabet_size=3, code_length=3, seed=seed)
        cb = build_codebook(spec)
        np.testing.assert_array_equal(load_profile(cb), cb.final_loads)


def test_load_profile_naive_recomputation():
    spec = CodebookSpec(class_count=7, alphabet_size=3, code_length=3, alpha=2.0, seed=1)
    cb = build_codebook(spec)
    naive = np.zeros(3)
    for c in range(7):
        for j in range(3):
            naive[j] += (cb.rows[c, j] / 2) ** 2.0
    np.testing.assert_allclose(load_profile(cb), naive, atol=1e-12)


def test_all_zero_column_has_zero_load():
    spec = CodebookSpec(class_count=2, alphabet_size=2, code_length=2, seed=0)
    cb = Codebook.from_rows(np.array([[0, 0], [1, 0]]), spec)
    assert cb.final_loads[1] == 0.0


def test_full_codebook_loads_symmetric():
    # All k**n codes used: every column carries each symbol k**(n-1) times.
    k, n = 3, 2
    spec = CodebookSpec(class_count=k**n, alphabet_size=k, code_length=n, seed=2)
    cb = build_codebook(spec)
    expected = k ** (n - 1) * sum(range(k)) / (k - 1)
    np.testing.assert_allclose(cb.final_loads, expected, atol=1e-12)


def test_greedy_hits_optimum_small_instance():
    """C=3, k=2, n=2 with negligible tie noise lands on the brute-force
    optimum of the fair-distribution objective."""
    spec = CodebookSpec(
        class_count=3, alphabet_size=2, code_length=2, alpha=1.0, tie_epsilon=1e-300,
        seed=0,
    )
    cb = build_codebook(spec)
    assert cb.final_loads.max() == pytest.approx(
        brute_force_min_max_load(3, 2, 2, 1.0), abs=1e-12
    )
    assert cb.final_loads.max() == pytest.approx(1.0, abs=1e-12)


def test_sampled_pool_unique_and_deterministic():
    # 3**9 = 19683 > default pool cap, so the sampled-pool path engages.
    spec = CodebookSpec(class_count=60, alphabet_size=3, code_length=9, seed=8)
    a = build_codebook(spec)
    b = build_codebook(spec)
    assert np.array_equal(a.rows, b.rows)
    assert len({tuple(r) for r in a.rows}) == 60
    assert spec.code_space > spec.candidate_pool_cap


def test_from_rows_rejects_duplicates():
    spec = CodebookSpec(class_count=2, alphabet_size=2, code_length=2, seed=0)
    with pytest.raises(ConfigurationError):
        Codebook.from_rows(np.array([[0, 1], [0, 1]]), spec)
