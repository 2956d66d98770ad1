"""Evaluation metrics: temperature fluctuation, recovery time, drop rate,
detection scores, and threshold-coverage tiers.

Everything here is pure post-processing over a finished run's arrays, so
recomputation from exported artifacts matches the live values exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .detector import ALL_MONITORED, FEATURE_SETS, NEVER_OUT, TEMP_FEATURE
from .errors import ContractViolation
from .fixedpoint import ONE


@dataclass
class Scores:
    precision: float
    recall: float
    f1: float
    accuracy: float

    def as_dict(self) -> Dict[str, float]:
        return {"precision": self.precision, "recall": self.recall,
                "f1": self.f1, "accuracy": self.accuracy}


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _f1(precision: float, recall: float) -> float:
    return _safe_div(2.0 * precision * recall, precision + recall)


def detection_scores(predictions: Sequence[int], truths: Sequence[int],
                     task: str = "binary") -> Scores:
    """Confusion-matrix scores over aligned prediction/truth streams.

    Binary collapses labels {1, 2} to 1 and scores the positive class;
    multiclass macro-averages precision/recall/F1 over the classes that
    occur in either stream.
    """
    preds = np.asarray(predictions)
    truth = np.asarray(truths)
    if preds.size == 0 or preds.shape != truth.shape:
        raise ContractViolation("prediction/truth streams must be equal-length and non-empty")
    if task == "binary":
        p = preds > 0
        t = truth > 0
        tp = int(np.sum(p & t))
        fp = int(np.sum(p & ~t))
        fn = int(np.sum(~p & t))
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        accuracy = float(np.mean(p == t))
        return Scores(precision, recall, _f1(precision, recall), accuracy)
    if task != "multiclass":
        raise ContractViolation(f"unknown task: {task}")
    classes = sorted(set(np.unique(preds)) | set(np.unique(truth)))
    precisions, recalls, f1s = [], [], []
    for cls in classes:
        p = preds == cls
        t = truth == cls
        tp = int(np.sum(p & t))
        prec = _safe_div(tp, int(np.sum(p)))
        rec = _safe_div(tp, int(np.sum(t)))
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(_f1(prec, rec))
    accuracy = float(np.mean(preds == truth))
    return Scores(float(np.mean(precisions)), float(np.mean(recalls)),
                  float(np.mean(f1s)), accuracy)


def temp_fluctuation(temps: Sequence[float], epoch: int = 1000) -> float:
    """Average peak-to-trough excursion per evaluation epoch (deg C)."""
    arr = np.asarray(temps, dtype=np.float64)
    if arr.size == 0:
        raise ContractViolation("temp_fluctuation requires a non-empty window")
    if arr.size < epoch:
        return float(arr.max() - arr.min())
    n_epochs = arr.size // epoch
    trimmed = arr[:n_epochs * epoch].reshape(n_epochs, epoch)
    return float(np.mean(trimmed.max(axis=1) - trimmed.min(axis=1)))


def fluctuation_summary(reported_hist_raw: np.ndarray,
                        router_ids: Optional[Sequence[int]],
                        epoch: int = 1000) -> float:
    """Mean per-epoch excursion (deg C) over the given routers."""
    hist = reported_hist_raw
    if router_ids is not None and len(router_ids) > 0:
        hist = hist[list(router_ids)]
    cycles = hist.shape[1]
    n_epochs = max(1, cycles // epoch)
    span = n_epochs * epoch if cycles >= epoch else cycles
    trimmed = hist[:, :span].astype(np.float64).reshape(hist.shape[0], n_epochs, -1)
    excursions = trimmed.max(axis=2) - trimmed.min(axis=2)
    return float(np.mean(excursions)) / ONE


def windowed_fluctuation(hist_raw: np.ndarray,
                         windows: Sequence[Tuple[int, int, int]],
                         epoch: int = 1000) -> Optional[float]:
    """Mean per-epoch excursion restricted to (router, start, end) windows.

    Epochs are the global epoch grid; an epoch counts for a window when they
    overlap. The same windows applied to different scenario modes give
    directly comparable numbers.
    """
    cells = set()
    cycles = hist_raw.shape[1]
    for rid, start, end in windows:
        first = max(0, start // epoch)
        last = min((cycles - 1) // epoch, max(first, (min(end, cycles - 1)) // epoch))
        for e in range(first, last + 1):
            cells.add((rid, e))
    if not cells:
        return None
    values = []
    for rid, e in sorted(cells):
        seg = hist_raw[rid, e * epoch:(e + 1) * epoch]
        if seg.size:
            values.append(float(seg.max() - seg.min()))
    return float(np.mean(values)) / ONE if values else None


def recovery_time(episodes: Sequence[Tuple[int, ...]]) -> Optional[float]:
    """Mean cycles from first nonzero level to full reopen; None if no
    episodes occurred."""
    if not episodes:
        return None
    return float(np.mean([e[2] for e in episodes]))


def episode_level_stats(episodes: Sequence[Tuple[int, int, int, int]],
                        drop_events: Sequence[Tuple[int, int]],
                        injected_packets: int) -> Dict[int, Dict[str, float]]:
    """Recovery time and drop rate bucketed by each episode's peak anomaly
    level, mirroring per-level evaluation charts.

    Drops are attributed to the episode whose router and span contain them.
    Returns {level: {"recovery_mean", "episodes", "drop_rate"}}.
    """
    spans: Dict[int, List[Tuple[int, int, int]]] = {}
    for rid, start, recovery, peak in episodes:
        spans.setdefault(rid, []).append((start, start + recovery, peak))
    drop_counts = {1: 0, 2: 0, 3: 0}
    for rid, cycle in drop_events:
        for start, end, peak in spans.get(rid, ()):
            if start <= cycle <= end:
                drop_counts[min(max(peak, 1), 3)] += 1
                break
    out: Dict[int, Dict[str, float]] = {}
    for level in (1, 2, 3):
        recs = [rec for (_r, _s, rec, peak) in episodes if peak == level]
        entry: Dict[str, float] = {"episodes": float(len(recs))}
        if recs:
            entry["recovery_mean"] = float(np.mean(recs))
        if injected_packets > 0:
            entry["drop_rate"] = 100.0 * drop_counts[level] / injected_packets
        out[level] = entry
    return out


def drop_rate(dropped_packets: int, injected_packets: int) -> Optional[float]:
    if injected_packets <= 0:
        return None
    return 100.0 * dropped_packets / injected_packets


def coverage_tiers(reported_hist_raw: np.ndarray,
                   sample_stride: int = 1) -> Dict[int, float]:
    """Static threshold coverage per tier, averaged over routers.

    For each router, thresholds are mean -/+ (mean >> n) of its own stream
    mean; coverage is the fraction of that router's samples inside the band
    (inclusive). Returns {n: percentage}.
    """
    hist = reported_hist_raw[:, ::sample_stride].astype(np.int64)
    n_routers, n_samples = hist.shape
    out = {}
    means = np.rint(hist.mean(axis=1)).astype(np.int64)
    for n in range(1, 8):
        widths = means >> n
        lower = (means - widths)[:, None]
        upper = (means + widths)[:, None]
        inside = (hist >= lower) & (hist <= upper)
        out[n] = float(np.mean(inside.mean(axis=1)) * 100.0)
    return out


# ----------------------------------------------------------------------
# multi-set scoring from bank arrays

def _sticky_dir(dirs: np.ndarray) -> np.ndarray:
    """Forward-fill the last nonzero direction along the cycle axis."""
    n, cycles = dirs.shape
    idx = np.where(dirs != 0, np.arange(cycles)[None, :], 0)
    idx = np.maximum.accumulate(idx, axis=1)
    filled = np.take_along_axis(dirs, idx, axis=1)
    # Positions before any nonzero entry resolve to index 0; mask them off
    # unless cycle 0 itself was nonzero.
    never = (idx == 0) & (dirs[:, :1] == 0)
    filled[never] = 0
    return filled


def bank_level_streams(bank_tiers: np.ndarray, bank_dirs: np.ndarray,
                       set_id: int, sigma: int) -> Tuple[np.ndarray, np.ndarray]:
    """(level, predicted_class) arrays for one feature set at one tier."""
    feat_idx = [ALL_MONITORED.index(f) for f in FEATURE_SETS[set_id]]
    out = bank_tiers[:, :, feat_idx] <= sigma
    level = out.sum(axis=2).astype(np.int8)
    temp_idx = ALL_MONITORED.index(TEMP_FEATURE[set_id])
    temp_out = bank_tiers[:, :, temp_idx] <= sigma
    temp_dir = np.where(temp_out, bank_dirs[:, :, temp_idx], 0)
    last_dir = _sticky_dir(temp_dir)
    cls = np.where(
        level == 0, 0,
        np.where(temp_dir < 0, 1,
                 np.where(temp_dir > 0, 2,
                          np.where(last_dir < 0, 1, 2))))
    return level, cls.astype(np.int8)


def score_bank(bank_tiers: np.ndarray, bank_dirs: np.ndarray,
               truth: np.ndarray,
               sets: Sequence[int] = (1, 2, 3, 4, 5),
               sigmas: Sequence[int] = (1, 2, 3, 4, 5, 6, 7)
               ) -> Dict[Tuple[int, int], Dict[str, Scores]]:
    """Binary and multiclass scores for every (set, sigma) cell."""
    results: Dict[Tuple[int, int], Dict[str, Scores]] = {}
    flat_truth = truth.reshape(-1)
    for set_id in sets:
        for sigma in sigmas:
            level, cls = bank_level_streams(bank_tiers, bank_dirs, set_id, sigma)
            flat_cls = cls.reshape(-1)
            results[(set_id, sigma)] = {
                "binary": detection_scores(flat_cls, flat_truth, "binary"),
                "multiclass": detection_scores(flat_cls, flat_truth, "multiclass"),
            }
    return results


@dataclass
class ScenarioMetrics:
    mode: str
    seed: int
    sigma: int
    feature_set: int
    severity: Optional[int] = None
    temp_fluct: Optional[float] = None
    temp_fluct_attacked: Optional[float] = None
    temp_fluct_reported: Optional[float] = None
    recovery_time: Optional[float] = None
    recovery_episodes: int = 0
    drop_rate: Optional[float] = None
    injected_packets: int = 0
    delivered_packets: int = 0
    dropped_packets: int = 0
    detection: Dict[str, Dict[str, float]] = field(default_factory=dict)
    coverage: Dict[int, float] = field(default_factory=dict)
    module_row_accuracy: Dict[str, float] = field(default_factory=dict)
    level_stats: Dict[int, Dict[str, float]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "sigma": self.sigma,
            "feature_set": self.feature_set,
            "severity": self.severity,
            "temp_fluct": self.temp_fluct,
            "temp_fluct_attacked": self.temp_fluct_attacked,
            "temp_fluct_reported": self.temp_fluct_reported,
            "recovery_time": self.recovery_time,
            "recovery_episodes": self.recovery_episodes,
            "drop_rate": self.drop_rate,
            "injected_packets": self.injected_packets,
            "delivered_packets": self.delivered_packets,
            "dropped_packets": self.dropped_packets,
            "detection": self.detection,
            "coverage": {str(k): v for k, v in self.coverage.items()},
            "module_row_accuracy": self.module_row_accuracy,
            "level_stats": {str(k): v for k, v in self.level_stats.items()},
        }
