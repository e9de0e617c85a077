"""Command-line interface.

Subcommands: gen-blobs, train, eval, sweep, inspect. Relative output paths
land in $LOGHD_OUT_DIR when that variable is set. Exit codes: 0 success,
2 configuration/infeasibility error, 3 ingestion error, 4 format error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .compression import QuantSpec
from .core import EncoderSpec, LabeledDataset, train_prototypes
from .datasets import DatasetSpec, gen_blobs, load_dataset, write_csv
from .errors import ConfigurationError, FormatError, IngestionError, LogHDError
from .faults import FaultSpec, budget_ledger, evaluate_under_faults
from .harness import (
    ExperimentPlan,
    derive_seed,
    emit_results,
    load_model,
    run_plan,
    save_model,
)
from .methods import build_artifact
from .model import RefinementSpec

OUT_DIR_ENV = "LOGHD_OUT_DIR"


def _out_path(raw: str) -> Path:
    path = Path(raw)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_gen_blobs(args) -> int:
    train, test = gen_blobs(
        args.classes,
        args.features,
        args.train_per_class,
        args.test_per_class,
        seed=args.seed,
        center_spread=args.center_spread,
        cluster_std=args.cluster_std,
    )
    write_csv(_out_path(args.out_train), train)
    write_csv(_out_path(args.out_test), test)
    print(f"wrote {args.out_train} ({train.sample_count} rows) and "
          f"{args.out_test} ({test.sample_count} rows)")
    return 0


def _load_pair(args):
    spec = DatasetSpec(
        name=args.dataset_name,
        train_path=args.train,
        test_path=args.test,
    )
    return load_dataset(spec)


def _cmd_train(args) -> int:
    loaded = _load_pair(args)
    enc = EncoderSpec(
        input_dim=loaded.train.feature_count,
        hyper_dim=args.hyper_dim,
        seed=derive_seed(args.seed, "encoder"),
        nonlinearity=args.nonlinearity,
    )
    protos = train_prototypes(loaded.train, enc)
    refinement = RefinementSpec(
        epochs=args.epochs,
        learning_rate=args.lr,
        shuffle_seed=derive_seed(args.seed, "refine"),
    )
    artifact = build_artifact(
        args.method,
        protos,
        loaded.train,
        QuantSpec(bits=args.bits),
        alphabet_size=args.k,
        code_length=args.bundles,
        sparsity=args.sparsity,
        codebook_seed=derive_seed(args.seed, "codebook"),
        refinement=refinement,
        scaler=loaded.scaler,
    )
    path = _out_path(args.out)
    save_model(path, artifact)
    ledger = budget_ledger(artifact.state, artifact.class_count, artifact.hyper_dim)
    acc = artifact.accuracy(loaded.test)
    print(f"model: {path}")
    print(f"method={args.method} C={artifact.class_count} D={artifact.hyper_dim} "
          f"n={artifact.bundle_count} k={artifact.alphabet_size} "
          f"S={artifact.sparsity:g} bits={artifact.bits}")
    print(f"stored coords: {ledger.model_coords} "
          f"(fraction {ledger.fraction:.4g} of baseline {ledger.baseline_coords}); "
          f"payload {ledger.payload_bytes} bytes")
    print(f"clean test accuracy: {acc:.4f}")
    return 0


def _cmd_eval(args) -> int:
    artifact = load_model(args.model)
    features, labels = _read_eval_csv(args.test)
    if artifact.scaler is not None:
        features = artifact.scaler.apply(features)
    try:
        labels = artifact.internal_labels(labels)
    except ValueError as exc:
        raise IngestionError(f"{args.test}: {exc}")
    # Plain constructor: an eval split need not contain every class.
    data = LabeledDataset(
        features=np.asarray(features, dtype=np.float64),
        labels=labels,
        class_count=artifact.class_count,
    )
    if args.flip_probability is None:
        preds = artifact.predict_batch(data.features)
        print(f"clean accuracy: {float(np.mean(preds == data.labels)):.4f}")
        return 0
    spec = FaultSpec(
        flip_probability=args.flip_probability,
        seed=args.seed,
        trials=args.trials,
    )
    accs = evaluate_under_faults(artifact, data, spec)
    print(f"p={args.flip_probability:g} trials={args.trials} "
          f"mean={accs.mean():.4f} std={accs.std():.4f}")
    for t, a in enumerate(accs):
        print(f"  trial {t}: {a:.4f}")
    return 0


def _read_eval_csv(path: str):
    from .datasets import _read_csv

    return _read_csv(path)


def _cmd_sweep(args) -> int:
    if args.plan:
        plan = ExperimentPlan.from_json(args.plan)
    else:
        if not args.train or not args.test:
            raise ConfigurationError("either --plan or --train/--test is required")
        plan = ExperimentPlan(
            dataset={
                "kind": "csv",
                "name": args.dataset_name,
                "train": args.train,
                "test": args.test,
            },
            methods=tuple(args.methods),
            hyper_dim=args.hyper_dim,
            budget_fractions=tuple(args.budgets),
            precisions=tuple(args.bits),
            flip_probabilities=tuple(args.p_grid),
            trials=args.trials,
            seed=args.seed,
        )
    rows = run_plan(plan)
    path = _out_path(args.out)
    emit_results(rows, path)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _cmd_inspect(args) -> int:
    artifact = load_model(args.model)
    ledger = budget_ledger(artifact.state, artifact.class_count, artifact.hyper_dim)
    print(f"method={artifact.method} C={artifact.class_count} D={artifact.hyper_dim} "
          f"n={artifact.bundle_count} k={artifact.alphabet_size} "
          f"S={artifact.sparsity:g} bits={artifact.bits}")
    print(f"stored coords: main={ledger.main_coords} profiles={ledger.profile_coords} "
          f"fraction={ledger.fraction:.6g} payload={ledger.payload_bytes} bytes")
    if artifact.codebook is not None:
        print("codebook loads:", " ".join(f"{v:.4g}" for v in artifact.codebook.final_loads))
        if args.codebook_csv:
            path = _out_path(args.codebook_csv)
            with open(path, "w") as fh:
                for row in artifact.codebook.rows:
                    fh.write(",".join(str(int(s)) for s in row) + "\n")
            print(f"codebook rows written to {path}")
        else:
            for c, row in enumerate(artifact.codebook.rows):
                print(f"  class {c}: {','.join(str(int(s)) for s in row)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loghd",
        description="Class-axis compressed HDC classifiers with a bit-flip robustness harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-blobs", help="write a synthetic blob dataset as CSVs")
    g.add_argument("--classes", type=int, default=16)
    g.add_argument("--features", type=int, default=24)
    g.add_argument("--train-per-class", type=int, default=100)
    g.add_argument("--test-per-class", type=int, default=50)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--center-spread", type=float, default=3.0)
    g.add_argument("--cluster-std", type=float, default=1.0)
    g.add_argument("--out-train", required=True)
    g.add_argument("--out-test", required=True)
    g.set_defaults(func=_cmd_gen_blobs)

    t = sub.add_parser("train", help="train one model and save it")
    t.add_argument("--train", required=True, help="training CSV (features,label)")
    t.add_argument("--test", required=True, help="test CSV for the accuracy report")
    t.add_argument("--dataset-name", default="dataset")
    t.add_argument("--method", choices=["conventional", "loghd", "sparsehd", "hybrid"],
                   default="loghd")
    t.add_argument("--hyper-dim", type=int, default=4096)
    t.add_argument("--paper-scale", action="store_true",
                   help="use hyper_dim=10000 regardless of --hyper-dim")
    t.add_argument("--k", type=int, default=2, help="alphabet size")
    t.add_argument("--bundles", type=int, default=None,
                   help="bundle count n (default: minimum feasible + redundancy)")
    t.add_argument("--redundancy", type=int, default=1,
                   help="extra bundles beyond the feasibility minimum")
    t.add_argument("--sparsity", type=float, default=0.0)
    t.add_argument("--bits", type=int, default=8, choices=[1, 2, 4, 8])
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--lr", type=float, default=3e-4)
    t.add_argument("--nonlinearity", default="cosine", choices=["cosine", "sign", "none"])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="evaluate a saved model on a test CSV")
    e.add_argument("--model", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--dataset-name", default="dataset")
    e.add_argument("--flip-probability", type=float, default=None)
    e.add_argument("--trials", type=int, default=20)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=_cmd_eval)

    s = sub.add_parser("sweep", help="run an experiment plan and emit a CSV")
    s.add_argument("--plan", help="plan JSON file (overrides other flags)")
    s.add_argument("--train")
    s.add_argument("--test")
    s.add_argument("--dataset-name", default="dataset")
    s.add_argument("--methods", nargs="+",
                   default=["conventional", "loghd", "sparsehd", "hybrid"])
    s.add_argument("--hyper-dim", type=int, default=4096)
    s.add_argument("--budgets", type=float, nargs="+", default=[0.25])
    s.add_argument("--bits", type=int, nargs="+", default=[8])
    s.add_argument("--p-grid", type=float, nargs="+",
                   default=[0.0, 0.1, 0.2, 0.4, 0.6, 0.8])
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sweep)

    i = sub.add_parser("inspect", help="dump a model's codebook and memory ledger")
    i.add_argument("--model", required=True)
    i.add_argument("--codebook-csv", default=None,
                   help="write the codebook symbol matrix to this CSV")
    i.set_defaults(func=_cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "paper_scale", False):
        args.hyper_dim = 10000
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 4
    except LogHDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
