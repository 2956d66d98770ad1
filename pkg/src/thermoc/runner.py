"""Scenario orchestration: single runs, sweeps, and report assembly.

A scenario couples a configuration with a mode:

* ``baseline``  - no Trojans, response off (clean reference)
* ``attack``    - Trojans on, response off (uncountered)
* ``mitigated`` - Trojans on, response on

The three modes share every other parameter, including the derived attack
schedule, so their metrics are directly comparable. An optional severity
tier (1..3) scales the Trojan's reporting offset.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .config import SimConfig, config_to_dict
from .engine import RunResult, World
from .metrics import (ScenarioMetrics, coverage_tiers, detection_scores,
                      drop_rate, episode_level_stats, fluctuation_summary,
                      recovery_time, score_bank, windowed_fluctuation)

MODES = ("baseline", "attack", "mitigated")

# Severity tiers scale how hard the Trojan leans on the sensor and how many
# routers it infects.
SEVERITY_DELTA = {1: 2.0, 2: 3.2, 3: 4.0}
SEVERITY_COUNT = {1: 6, 2: 12, 3: 18}


def apply_severity(cfg: SimConfig, severity: Optional[int]) -> SimConfig:
    if severity is None:
        return cfg
    if severity not in SEVERITY_DELTA:
        raise ValueError(f"severity must be 1..3, got {severity}")
    out = cfg.copy()
    out.trojan.delta = SEVERITY_DELTA[severity]
    out.trojan.count = SEVERITY_COUNT[severity]
    return out


def run_scenario(cfg: SimConfig, mode: str, severity: Optional[int] = None,
                 bank: bool = False, collect_events: bool = False,
                 with_coverage: bool = False) -> Tuple[ScenarioMetrics, RunResult]:
    cfg = apply_severity(cfg, severity)
    world = World(cfg, mode, bank=bank, collect_events=collect_events)
    result = world.run()

    epoch = cfg.metrics.epoch_cycles
    sm = ScenarioMetrics(mode=mode, seed=cfg.seed, sigma=cfg.detector.sigma_index,
                         feature_set=cfg.detector.feature_set, severity=severity)
    sm.temp_fluct = fluctuation_summary(result.true_hist, None, epoch)
    sm.temp_fluct_reported = fluctuation_summary(result.reported_hist, None, epoch)
    if result.schedule.instances:
        # Compare modes over the same nominal attack windows (router id,
        # scheduled span plus the control loop's settling tail).
        windows = []
        for inst in result.schedule.instances:
            span = 2 * (inst.budget_raw // max(1, inst.delta_raw)) + 400
            windows.append((inst.router_id, inst.start_cycle,
                            inst.start_cycle + span))
        sm.temp_fluct_attacked = windowed_fluctuation(
            result.true_hist, windows, epoch)
    sm.recovery_time = recovery_time(result.episodes)
    sm.recovery_episodes = len(result.episodes)
    counters = result.counters
    sm.drop_rate = drop_rate(counters.dropped_packets, counters.injected_packets)
    if result.episodes:
        sm.level_stats = episode_level_stats(
            result.episodes, result.drop_events or [], counters.injected_packets)
    sm.injected_packets = counters.injected_packets
    sm.delivered_packets = counters.delivered_packets
    sm.dropped_packets = counters.dropped_packets

    cell = f"set{cfg.detector.feature_set}_sigma{cfg.detector.sigma_index}"
    flat_preds = result.preds.reshape(-1)
    flat_truth = result.truth.reshape(-1)
    sm.detection[cell] = {
        "binary": detection_scores(flat_preds, flat_truth, "binary").as_dict(),
        "multiclass": detection_scores(flat_preds, flat_truth, "multiclass").as_dict(),
    }
    if bank and result.bank_tiers is not None:
        for (set_id, sigma), scores in score_bank(
                result.bank_tiers, result.bank_dirs, result.truth).items():
            sm.detection[f"set{set_id}_sigma{sigma}"] = {
                task: s.as_dict() for task, s in scores.items()}

    if with_coverage:
        sm.coverage = coverage_tiers(result.reported_hist)

    if result.event_rows:
        row_preds = [int(result.preds[row[7], row[0]]) for row in result.event_rows]
        row_truth = [row[18] for row in result.event_rows]
        sm.module_row_accuracy = {
            "binary": detection_scores(row_preds, row_truth, "binary").accuracy,
            "multiclass": detection_scores(row_preds, row_truth, "multiclass").accuracy,
        }
    return sm, result


def write_report(sm: ScenarioMetrics, cfg: SimConfig, path: str | Path) -> None:
    payload = {"config": config_to_dict(cfg), "metrics": sm.as_dict()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------------
# sweeps

CSV_FIELDS = ("feature_set", "sigma", "mode", "severity", "seed", "task",
              "temp_fluct", "temp_fluct_attacked", "recovery_time",
              "drop_rate", "precision", "recall", "f1", "accuracy")


@dataclass(frozen=True)
class SweepCell:
    feature_set: int
    sigma: int
    mode: str
    severity: int
    seed: int

    @property
    def key(self) -> str:
        return (f"set{self.feature_set}_sigma{self.sigma}_{self.mode}"
                f"_sev{self.severity}_seed{self.seed}")


def _run_cell(base_cfg: SimConfig, cell: SweepCell) -> dict:
    cfg = base_cfg.copy()
    cfg.detector.feature_set = cell.feature_set
    cfg.detector.sigma_index = cell.sigma
    cfg.seed = cell.seed
    sm, _ = run_scenario(cfg, cell.mode, severity=cell.severity)
    return sm.as_dict()


def sweep(base_cfg: SimConfig, sets: Sequence[int], sigmas: Sequence[int],
          modes: Sequence[str], severities: Sequence[int], seeds: Sequence[int],
          out_dir: str | Path, workers: int = 1) -> Path:
    """Run the grid, resumably; returns the combined CSV path.

    Completed cells are recorded in ``index.json`` and skipped on re-runs;
    per-cell failures are recorded and do not abort the sweep.
    """
    if not seeds:
        raise ValueError("sweep requires at least one seed")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index_path = out_dir / "index.json"
    index: Dict[str, dict] = {}
    if index_path.exists():
        index = json.loads(index_path.read_text())

    cells = [SweepCell(s, g, m, v, k) for s, g, m, v, k in
             product(sets, sigmas, modes, severities, seeds)]
    todo = [c for c in cells if c.key not in index]

    def record(cell: SweepCell, payload: dict) -> None:
        index[cell.key] = payload
        index_path.write_text(json.dumps(index, indent=1, sort_keys=True))

    if workers > 1 and len(todo) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_cell, base_cfg, c): c for c in todo}
            for future, cell in futures.items():
                try:
                    record(cell, {"ok": True, "metrics": future.result()})
                except Exception as exc:  # noqa: BLE001 - per-cell isolation
                    record(cell, {"ok": False, "error": str(exc)})
    else:
        for cell in todo:
            try:
                record(cell, {"ok": True, "metrics": _run_cell(base_cfg, cell)})
            except Exception as exc:  # noqa: BLE001 - per-cell isolation
                record(cell, {"ok": False, "error": str(exc)})

    csv_path = out_dir / "sweep.csv"
    lines = [",".join(CSV_FIELDS)]
    for cell in cells:
        payload = index.get(cell.key)
        if not payload or not payload.get("ok"):
            continue
        m = payload["metrics"]
        det = m["detection"].get(f"set{cell.feature_set}_sigma{cell.sigma}", {})
        for task in ("binary", "multiclass"):
            scores = det.get(task, {})
            row = [str(cell.feature_set), str(cell.sigma), cell.mode,
                   str(cell.severity), str(cell.seed), task]
            for name in ("temp_fluct", "temp_fluct_attacked", "recovery_time",
                         "drop_rate"):
                value = m.get(name)
                row.append("" if value is None else f"{value:.6f}")
            for name in ("precision", "recall", "f1", "accuracy"):
                value = scores.get(name)
                row.append("" if value is None else f"{value:.6f}")
            lines.append(",".join(row))
    csv_path.write_text("\n".join(lines) + "\n")
    return csv_path


def default_out_dir() -> Path:
    return Path(os.environ.get("THERMOC_OUT_DIR", "out"))
