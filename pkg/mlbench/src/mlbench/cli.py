"""Command line: evaluate classifiers or rank feature importances."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import SchemaError, SingleClassError
from .harness import feature_importance, train_eval
from .models import MODEL_NAMES


def cmd_run(args) -> int:
    models = args.models or list(MODEL_NAMES)
    report = {"csv": args.csv, "task": args.task, "split_seed": args.seed,
              "models": {}}
    for name in models:
        scores = train_eval(args.csv, name, args.task, args.seed)
        report["models"][name] = {k: scores[k] for k in
                                  ("accuracy", "precision", "recall", "f1")}
        print(f"{name}: accuracy={scores['accuracy']:.4f} f1={scores['f1']:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_importance(args) -> int:
    ranked = feature_importance(args.csv, args.seed)
    payload = {"csv": args.csv, "seed": args.seed,
               "importances": [{"feature": f, "importance": v} for f, v in ranked]}
    for feature, value in ranked[:8]:
        print(f"{feature}: {value:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlbench",
        description="Classifier comparison over exported router-event datasets")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train/evaluate classifiers on a dataset")
    p_run.add_argument("--csv", required=True)
    p_run.add_argument("--task", choices=("binary", "multiclass"), default="binary")
    p_run.add_argument("--models", nargs="*", choices=MODEL_NAMES)
    p_run.add_argument("--seed", type=int, default=0, help="train/test split seed")
    p_run.add_argument("--out", help="report JSON path")
    p_run.set_defaults(func=cmd_run)

    p_imp = sub.add_parser("importance", help="rank forest feature importances")
    p_imp.add_argument("--csv", required=True)
    p_imp.add_argument("--seed", type=int, default=0)
    p_imp.add_argument("--out", help="JSON output path")
    p_imp.set_defaults(func=cmd_importance)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, SingleClassError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
