"""Plans, the sweep runner, CSV emission, and model-file serialization."""

import json

import numpy as np
import pytest

from loghd.compression import QuantSpec
from loghd.core import EncoderSpec, train_prototypes
from loghd.datasets import gen_blobs, scale_blob_pair
from loghd.errors import ConfigurationError, FormatError
from loghd.harness import (
    CSV_COLUMNS,
    ExperimentPlan,
    SweepRow,
    derive_seed,
    emit_results,
    load_model,
    read_results,
    run_plan,
    save_model,
)
from loghd.methods import build_artifact
from loghd.model import RefinementSpec, estimate_profiles


def _tiny_plan(**overrides):
    base = dict(
        dataset={"kind": "blobs", "classes": 6, "features": 10,
                 "train_per_class": 20, "test_per_class": 10, "cluster_std": 1.0},
        methods=("conventional", "loghd", "sparsehd"),
        hyper_dim=256,
        alphabet_sizes=(2,),
        budget_fractions=(0.5,),
        precisions=(8,),
        flip_probabilities=(0.0, 0.2),
        trials=2,
        seed=71,
        refine_epochs=3,
    )
    base.update(overrides)
    return ExperimentPlan(**base)


def test_plan_json_round_trip(tmp_path):
    plan = _tiny_plan()
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan.to_dict()))
    again = ExperimentPlan.from_json(path)
    assert again == plan


def test_plan_rejects_unknown_fields():
    with pytest.raises(ConfigurationError):
        ExperimentPlan.from_dict({"dataset": {"kind": "blobs"}, "banana": 1})
    with pytest.raises(ConfigurationError):
        ExperimentPlan.from_dict({"dataset": {"kind": "blobs"}, "methods": ["magic"]})


def test_run_plan_deterministic_csv(tmp_path):
    plan = _tiny_plan()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_results(run_plan(plan), a)
    emit_results(run_plan(plan), b)
    assert a.read_bytes() == b.read_bytes()


def test_run_plan_clean_only_table():
    plan = _tiny_plan(flip_probabilities=(0.0,), trials=1)
    rows = run_plan(plan)
    assert all(r.status == "ok" for r in rows)
    assert all(r.p == 0.0 for r in rows)
    assert all(r.accuracy == r.clean_accuracy for r in rows)


def test_run_plan_marks_infeasible():
    plan = _tiny_plan(
        dataset={"kind": "blobs", "classes": 5, "features": 10,
                 "train_per_class": 20, "test_per_class": 10},
        methods=("loghd",),
        budget_fractions=(0.2,),
    )
    rows = run_plan(plan)
    assert len(rows) == 1
    assert rows[0].status == "infeasible"
    assert rows[0].accuracy is None


def test_run_plan_budget_fraction_recomputed_from_payload():
    plan = _tiny_plan(methods=("conventional", "loghd"))
    rows = run_plan(plan)
    conv = [r for r in rows if r.method == "conventional"]
    assert all(r.budget_fraction == 1.0 for r in conv)
    log = [r for r in rows if r.method == "loghd"]
    # n=3 of 6 classes plus profile coords: a bit above 0.5, never the
    # requested budget echoed back.
    expected = (3 * 256 + 6 * 3) / (6 * 256)
    assert all(abs(r.budget_fraction - expected) < 1e-9 for r in log)


def test_emit_refuses_empty(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_results([], tmp_path / "x.csv")


def test_emit_known_rows_exact_text(tmp_path):
    rows = [
        SweepRow("blobs", "loghd", 2, 5, 0.0, 8, 0.1, 0.313721, 0, 0.95, 0.9625, 123, "ok"),
        SweepRow("blobs", "sparsehd", None, None, 0.69, 8, 0.1, 0.31, 1, 0.875, 0.9, 124, "ok"),
        SweepRow("blobs", "loghd", 2, None, None, None, None, 0.2, None, None, None, None, "infeasible"),
    ]
    path = tmp_path / "rows.csv"
    emit_results(rows, path)
    expected = (
        ",".join(CSV_COLUMNS) + "\n"
        "blobs,loghd,2,5,0,8,0.1,0.313721,0,0.95,0.9625,123,ok\n"
        "blobs,sparsehd,,,0.69,8,0.1,0.31,1,0.875,0.9,124,ok\n"
        "blobs,loghd,2,,,,,0.2,,,,,infeasible\n"
    )
    assert path.read_text() == expected


def test_read_results_round_trip(tmp_path):
    plan = _tiny_plan()
    rows = run_plan(plan)
    path = tmp_path / "r.csv"
    emit_results(rows, path)
    back = read_results(path)
    assert len(back) == len(rows)
    path2 = tmp_path / "r2.csv"
    emit_results(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_shared_encoder_across_methods(blob_pair_small, proto_model_small):
    train, _, _ = blob_pair_small
    arts = [
        build_artifact("conventional", proto_model_small, train, QuantSpec(bits=8)),
        build_artifact("sparsehd", proto_model_small, train, QuantSpec(bits=8), sparsity=0.5),
        build_artifact("loghd", proto_model_small, train, QuantSpec(bits=8),
                       alphabet_size=2, code_length=3),
    ]
    assert all(a.encoder == proto_model_small.encoder for a in arts)


def _loghd_artifact(bits=4, n=3, d=512, seed=31):
    train, test = gen_blobs(5, 8, 20, 10, seed=seed)
    train, test, scaler = scale_blob_pair(train, test)
    spec = EncoderSpec(input_dim=8, hyper_dim=d, seed=seed + 1)
    protos = train_prototypes(train, spec)
    art = build_artifact(
        "loghd", protos, train, QuantSpec(bits=bits), alphabet_size=2, code_length=n,
        refinement=RefinementSpec(epochs=2, learning_rate=3e-4, shuffle_seed=2),
        scaler=scaler, label_values=np.arange(5),
    )
    return art, train, test


def test_save_load_prediction_parity(tmp_path):
    art, train, test = _loghd_artifact()
    path = tmp_path / "model.lhd"
    save_model(path, art)
    loaded = load_model(path)
    rng = np.random.default_rng(0)
    X = rng.random((100, 8))
    np.testing.assert_array_equal(art.predict_batch(X), loaded.predict_batch(X))
    assert loaded.codebook is not None
    np.testing.assert_array_equal(loaded.codebook.rows, art.codebook.rows)
    assert loaded.state.bits == art.state.bits


def test_profile_estimation_deterministic_after_reload(tmp_path):
    """Profiles recomputed from a reloaded model match the same computation
    on the in-memory model bit for bit (no state lost in serialization)."""
    from loghd.compression import dequantize

    art, train, test = _loghd_artifact(bits=8)
    path = tmp_path / "model.lhd"
    save_model(path, art)
    loaded = load_model(path)
    before = estimate_profiles(dequantize(art.state)["bundles"], train, art.encoder)
    after = estimate_profiles(dequantize(loaded.state)["bundles"], train, loaded.encoder)
    np.testing.assert_allclose(after, before, atol=1e-9)


def test_model_file_payload_bits_ledger():
    """1-bit, 26 classes, n=5, D=10000: payload is exactly 5*10000 + 26*5 bits."""
    train, test = gen_blobs(26, 12, 6, 2, seed=13)
    train, test, _ = scale_blob_pair(train, test)
    spec = EncoderSpec(input_dim=12, hyper_dim=10000, seed=3)
    protos = train_prototypes(train, spec)
    art = build_artifact("loghd", protos, train, QuantSpec(bits=1),
                         alphabet_size=2, code_length=5)
    assert art.state.total_bits == 5 * 10000 * 1 + 26 * 5 * 1
    assert art.state.payload_bytes == -(-(5 * 10000 + 26 * 5) // 8)


def test_load_rejects_truncation_and_corruption(tmp_path):
    art, _, _ = _loghd_artifact()
    path = tmp_path / "model.lhd"
    save_model(path, art)
    blob = path.read_bytes()

    trunc = tmp_path / "trunc.lhd"
    trunc.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(FormatError):
        load_model(trunc)

    magic = tmp_path / "magic.lhd"
    magic.write_bytes(b"LOGHD9" + blob[6:])
    with pytest.raises(FormatError):
        load_model(magic)

    corrupt = tmp_path / "corrupt.lhd"
    body = bytearray(blob)
    body[-10] ^= 0xFF  # inside the payload, so the checksum must trip
    corrupt.write_bytes(bytes(body))
    with pytest.raises(FormatError, match="checksum"):
        load_model(corrupt)


def test_derive_seed_stable():
    assert derive_seed(1, "encoder") == derive_seed(1, "encoder")
    assert derive_seed(1, "encoder") != derive_seed(2, "encoder")
    assert derive_seed(1, "a", 2) != derive_seed(1, "a", 3)


def test_hybrid_sparsity_grid_rows():
    plan = _tiny_plan(
        methods=("hybrid",),
        budget_fractions=(),
        sparsity_grid=(0.0, 0.5),
        flip_probabilities=(0.0,),
        trials=1,
    )
    rows = run_plan(plan)
    assert {r.sparsity for r in rows} == {0.0, 0.5}
    assert all(r.method == "hybrid" for r in rows)
