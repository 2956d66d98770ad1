"""Command-line entry points: run, sweep, export-dataset, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset
from .config import SimConfig, load_config
from .errors import ConfigError
from .runner import (MODES, default_out_dir, run_scenario, sweep, write_report)


def _int_list(text: str) -> list:
    return [int(part) for part in text.split(",") if part]


def _load_base_config(args) -> SimConfig:
    cfg = SimConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    if getattr(args, "set", None) is not None:
        cfg.detector.feature_set = args.set
    if getattr(args, "sigma", None) is not None:
        cfg.detector.sigma_index = args.sigma
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "cycles", None) is not None:
        cfg.sim_cycles = args.cycles
    if getattr(args, "pir", None) is not None:
        cfg.traffic.pir = args.pir
    cfg.validate()
    return cfg


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--set", type=int, choices=range(1, 6),
                        help="detector feature set (1..5)")
    parser.add_argument("--sigma", type=int, choices=range(1, 8),
                        help="threshold tier index (1..7)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--cycles", type=int)
    parser.add_argument("--pir", type=float)
    parser.add_argument("--out", help="output directory (default $THERMOC_OUT_DIR or ./out)")


def cmd_run(args) -> int:
    cfg = _load_base_config(args)
    out_dir = Path(args.out) if args.out else default_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    sm, result = run_scenario(cfg, args.mode, severity=args.severity,
                              collect_events=args.csv is not None,
                              with_coverage=args.coverage)
    report_path = out_dir / f"metrics_{args.mode}_seed{cfg.seed}.json"
    write_report(sm, cfg, report_path)
    print(f"wrote {report_path}")
    if args.csv:
        count = dataset.export_csv(result.event_rows, args.csv)
        print(f"wrote {count} rows to {args.csv}")
    return 0


def cmd_export_dataset(args) -> int:
    cfg = _load_base_config(args)
    out_dir = Path(args.out) if args.out else default_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = Path(args.csv) if args.csv else out_dir / f"dataset_{args.mode}_seed{cfg.seed}.csv"
    sm, result = run_scenario(cfg, args.mode, severity=args.severity,
                              collect_events=True)
    count = dataset.export_csv(result.event_rows, csv_path)
    report_path = out_dir / f"metrics_{args.mode}_seed{cfg.seed}.json"
    write_report(sm, cfg, report_path)
    print(f"wrote {count} rows to {csv_path}")
    print(f"wrote {report_path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_base_config(args)
    out_dir = Path(args.out) if args.out else default_out_dir()
    if not args.seeds:
        print("error: sweep requires --seeds", file=sys.stderr)
        return 2
    csv_path = sweep(cfg, args.sets, args.sigmas, args.modes, args.severities,
                     args.seeds, out_dir, workers=args.workers)
    print(f"wrote {csv_path}")
    return 0


def cmd_report(args) -> int:
    payload = json.loads(Path(args.path).read_text())
    metrics = payload.get("metrics", payload)
    for key in ("mode", "seed", "feature_set", "sigma", "severity"):
        if metrics.get(key) is not None:
            print(f"{key}: {metrics[key]}")
    for key in ("temp_fluct", "temp_fluct_attacked", "recovery_time", "drop_rate"):
        value = metrics.get(key)
        if value is not None:
            print(f"{key}: {value:.4f}")
    for cell, tasks in sorted(metrics.get("detection", {}).items()):
        for task, scores in sorted(tasks.items()):
            line = ", ".join(f"{k}={v:.4f}" for k, v in sorted(scores.items()))
            print(f"{cell} [{task}]: {line}")
    coverage = metrics.get("coverage") or {}
    for tier in sorted(coverage, key=int):
        print(f"coverage sigma{tier}: {coverage[tier]:.2f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoc",
        description="Mesh NoC simulator with thermal sensor attacks, "
                    "in-router anomaly detection, and shutdown response")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write a metrics report")
    _add_common(p_run)
    p_run.add_argument("--mode", choices=MODES, default="mitigated")
    p_run.add_argument("--severity", type=int, choices=(1, 2, 3), default=None)
    p_run.add_argument("--csv", help="also export the event dataset to this CSV")
    p_run.add_argument("--coverage", action="store_true",
                       help="include threshold-coverage tiers in the report")
    p_run.set_defaults(func=cmd_run)

    p_exp = sub.add_parser("export-dataset", help="run a scenario and export its event CSV")
    _add_common(p_exp)
    p_exp.add_argument("--mode", choices=MODES, default="attack")
    p_exp.add_argument("--severity", type=int, choices=(1, 2, 3), default=None)
    p_exp.add_argument("--csv", help="CSV output path")
    p_exp.set_defaults(func=cmd_export_dataset)

    p_sweep = sub.add_parser("sweep", help="run a (set x sigma x mode x severity x seed) grid")
    _add_common(p_sweep)
    p_sweep.add_argument("--sets", type=_int_list, default=[1, 2, 3, 4, 5])
    p_sweep.add_argument("--sigmas", type=_int_list, default=[5, 6, 7])
    p_sweep.add_argument("--modes", type=lambda s: s.split(","),
                         default=["baseline", "attack", "mitigated"])
    p_sweep.add_argument("--severities", type=_int_list, default=[2])
    p_sweep.add_argument("--seeds", type=_int_list, default=[])
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("report", help="pretty-print a metrics JSON")
    p_rep.add_argument("path")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
