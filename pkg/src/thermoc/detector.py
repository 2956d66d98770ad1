"""Per-router anomaly detection: features log, online weighted moving
average, shift-based threshold registers, and the anomaly-level register.

The reference operations in this module are scalar and bit-exact; the
engine-facing ``RouterDetector`` uses the same raw-integer arithmetic with
a fast deviation test that is provably equivalent to comparing against the
saturated threshold registers.

Thresholds are ``wma -/+ (wma >> n)`` for a tier index n in 1..7: the
half-width stands in for a standard deviation and costs one logical right
shift in hardware. Larger n means a tighter band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ContractViolation
from .fixedpoint import RAW_MAX, div_round_half_up, to_raw

STATUS_N = "N"
STATUS_U = "U"
STATUS_L = "L"

SIGMA_MIN = 1
SIGMA_MAX = 7
NEVER_OUT = 8  # sentinel tier: deviation never crosses even the tightest band

# Monitored feature groups. Each set pairs a designated temperature feature
# (used for the class-direction rule) with two complementary signals.
FEATURE_SETS: Dict[int, Tuple[str, str, str]] = {
    1: ("F15", "F17", "F16"),   # congestion + thermal
    2: ("F17", "F16", "F18"),   # multi-scale thermal
    3: ("F17", "F18", "F1"),    # thermal vs. time
    4: ("F18", "F7", "F10"),    # traffic characterization
    5: ("F16", "F8", "F6"),     # thermal vs. routing origin
}

TEMP_FEATURE: Dict[int, str] = {1: "F16", 2: "F16", 3: "F17", 4: "F18", 5: "F16"}

ALL_MONITORED: Tuple[str, ...] = (
    "F1", "F6", "F7", "F8", "F10", "F15", "F16", "F17", "F18")

# Gini-importance profile from the characterization study behind the feature
# sets. Configuration reference only; nothing here recomputes it.
FEATURE_IMPORTANCE: Dict[str, float] = {
    "F17": 0.3580,
    "F16": 0.3488,
    "F1": 0.0609,
    "F18": 0.0547,
    "F7": 0.0279,
    "F6": 0.0185,
    "F8": 0.0182,
    "F15": 0.0169,
    "F10": 0.0139,
}


@dataclass
class WmaState:
    """Weighted-moving-average register with its weight thresholds."""
    wma: int            # Q8.8 raw
    t1: int             # Q8.8 raw; samples below t1 weigh 1, otherwise 3
    t2: int             # Q8.8 raw; retained register, t1 < t2


def _weight(value_raw: int, t1_raw: int) -> int:
    # The weight rule distinguishes x < T1 from T1 <= x; the upper band
    # boundary carries the same weight as the middle band.
    return 1 if value_raw < t1_raw else 3


def wma_update(state: WmaState, x: int) -> WmaState:
    """One recursive update: new = (w1*x + w0*wma) / (w1 + w0), ties up."""
    w1 = _weight(x, state.t1)
    w0 = _weight(state.wma, state.t1)
    new = div_round_half_up(w1 * x + w0 * state.wma, w1 + w0)
    return WmaState(wma=new, t1=state.t1, t2=state.t2)


def sigma_shift(mean: int, n: int) -> int:
    """Threshold half-width: the Q8.8 raw mean logically shifted right by n."""
    if not SIGMA_MIN <= n <= SIGMA_MAX:
        raise ContractViolation(f"sigma index must be in 1..7, got {n}")
    if mean < 0:
        raise ContractViolation("mean must be non-negative")
    return mean >> n


def thresholds_approx(mean: int, n: int) -> Tuple[int, int]:
    """Symmetric thresholds around the mean, saturating at the raw range."""
    width = sigma_shift(mean, n)
    lower = mean - width
    upper = mean + width
    return (max(0, lower), min(RAW_MAX, upper))


def thresholds_exact(samples: Sequence[float], k: float) -> Tuple[float, float]:
    """Reference thresholds mean -/+ k * population std (oracle path only)."""
    if len(samples) == 0:
        raise ContractViolation("thresholds_exact requires non-empty samples")
    mean = sum(samples) / len(samples)
    var = sum((s - mean) ** 2 for s in samples) / len(samples)
    std = math.sqrt(var)
    return (mean - k * std, mean + k * std)


class FeaturesLog:
    """Ring buffer of the last W samples of one monitored feature."""

    def __init__(self, window: int = 8):
        if window < 2:
            raise ContractViolation("features log window must be >= 2")
        self.window = window
        self._items: List[int] = []

    def append(self, value: int) -> None:
        self._items.append(value)
        if len(self._items) > self.window:
            del self._items[0]

    def __len__(self) -> int:
        return len(self._items)

    def last(self) -> int:
        return self._items[-1]

    def previous(self) -> int:
        return self._items[-2]


def two_cycle_average(last: int, previous: int) -> int:
    return div_round_half_up(last + previous, 2)


def derive_feature(feature_id: str, log: FeaturesLog,
                   wma: Optional[WmaState] = None) -> Optional[int]:
    """Derived feature value from the log; None while still warming up."""
    if feature_id == "F17":
        if len(log) < 2:
            return None
        return two_cycle_average(log.last(), log.previous())
    if feature_id == "F18":
        if wma is None:
            return None
        return wma.wma
    if len(log) < 1:
        return None
    return log.last()


def status_of(value: int, lower: int, upper: int) -> str:
    """U above the upper threshold, L below the lower, N otherwise
    (boundaries inclusive in N)."""
    if value > upper:
        return STATUS_U
    if value < lower:
        return STATUS_L
    return STATUS_N


@dataclass
class AnomalyLevelRegister:
    level: int
    statuses: Tuple[str, str, str]


def classify(features: Sequence[int],
             regs: Sequence[Tuple[int, int]]) -> AnomalyLevelRegister:
    """Per-feature U/L/N against the threshold registers; level counts the
    features outside their band."""
    statuses = tuple(status_of(v, lo, hi) for v, (lo, hi) in zip(features, regs))
    level = sum(1 for s in statuses if s != STATUS_N)
    return AnomalyLevelRegister(level=level, statuses=statuses)  # type: ignore[arg-type]


def multiclass_predict(level: int, temp_status: str,
                       last_temp_status: Optional[str] = None) -> int:
    """Class rule: 0 when quiet; otherwise the reporting direction of the
    monitored temperature feature (L -> 1, U -> 2), falling back to the most
    recent non-N temperature direction, and to 2 with no history at all."""
    if level == 0:
        return 0
    if temp_status == STATUS_L:
        return 1
    if temp_status == STATUS_U:
        return 2
    if last_temp_status == STATUS_L:
        return 1
    if last_temp_status == STATUS_U:
        return 2
    return 2


def coverage(samples: Sequence[float], thresholds: Tuple[float, float]) -> float:
    """Percentage of samples inside [lower, upper], inclusive."""
    if len(samples) == 0:
        raise ContractViolation("coverage requires non-empty samples")
    lower, upper = thresholds
    inside = sum(1 for s in samples if lower <= s <= upper)
    return 100.0 * inside / len(samples)


def first_out_tier(wma: int, deviation: int) -> int:
    """Smallest tier n at which |deviation| breaches wma >> n.

    Returns NEVER_OUT when the deviation stays inside even the n=7 band.
    Equivalent to testing the saturated thresholds for every n, because all
    register values live in [0, RAW_MAX].
    """
    d = -deviation if deviation < 0 else deviation
    if d == 0:
        return NEVER_OUT
    n = (wma // d).bit_length()
    if n < SIGMA_MIN:
        n = SIGMA_MIN
    return n if n <= SIGMA_MAX else NEVER_OUT


class FeatureScaler:
    """Affine map from a feature's native range into the Q8.8 sensor band.

    Temperature features pass through unscaled. Erratic per-event signals
    (ids, hop counts) get a low gain so their thresholds watch for sustained
    level shifts rather than per-sample scatter; smoother signals keep more
    gain.
    """

    __slots__ = ("offset_raw", "gain")

    def __init__(self, offset: float, gain: float):
        self.offset_raw = to_raw(offset)
        self.gain = gain

    def scale(self, value: float) -> int:
        raw = self.offset_raw + int(round(value * self.gain * 256.0))
        if raw < 0:
            return 0
        if raw > RAW_MAX:
            return RAW_MAX
        return raw


def default_scalers(n_routers: int, sim_cycles: int,
                    max_hops: int) -> Dict[str, FeatureScaler]:
    ids = max(1, n_routers - 1)
    return {
        "F1": FeatureScaler(45.0, 45.0 / max(1, sim_cycles)),
        "F6": FeatureScaler(45.0, 1.3 / ids),
        "F7": FeatureScaler(45.0, 1.3 / ids),
        "F8": FeatureScaler(45.0, 1.3 / ids),
        "F10": FeatureScaler(45.0, 1.3 / max(1, max_hops)),
        "F15": FeatureScaler(45.0, 0.01),
    }


class _Monitor:
    """One feature's WMA register plus its last observed value."""

    __slots__ = ("wma", "value", "seen")

    def __init__(self):
        self.wma: Optional[int] = None
        self.value: Optional[int] = None
        self.seen = 0

    def observe(self, x: int, t1: int) -> None:
        self.value = x
        self.seen += 1
        if self.wma is None:
            self.wma = x
            return
        w1 = 1 if x < t1 else 3
        w0 = 1 if self.wma < t1 else 3
        self.wma = div_round_half_up(w1 * x + w0 * self.wma, w1 + w0)


EVENT_FEATURES = ("F6", "F7", "F8", "F10")


class RouterDetector:
    """Per-router detection state across the monitored features.

    ``evaluate`` is called once per cycle with the current reported
    temperature (Q8.8 raw) and any per-event feature samples that arrived
    this cycle; it returns (level, statuses, predicted_class) for the
    configured feature set and tier, and optionally the per-feature
    (first_out_tier, direction) pairs for offline multi-set scoring.

    Outside bank mode only the configured set's registers (plus the F16
    chain feeding F17/F18) are maintained.
    """

    __slots__ = ("t1", "t2", "sigma", "set_id", "set_features", "temp_feature",
                 "warmup", "window", "scalers", "monitors", "prev_reported",
                 "cycles_seen", "last_temp_dir", "bank", "tracked",
                 "needs_events", "needs_congestion", "pure_thermal",
                 "m16", "m17", "m18")

    def __init__(self, detector_cfg, scalers: Dict[str, FeatureScaler],
                 bank: bool = False):
        self.t1 = to_raw(detector_cfg.t1)
        self.t2 = to_raw(detector_cfg.t2)
        self.sigma = detector_cfg.sigma_index
        self.set_id = detector_cfg.feature_set
        self.set_features = FEATURE_SETS[self.set_id]
        self.temp_feature = TEMP_FEATURE[self.set_id]
        self.warmup = detector_cfg.warmup
        # Registers fold in one sample per features-log window: comparisons
        # run every cycle against registers that update every `window`
        # cycles, mirroring a log that flushes to the averaging stage.
        self.window = detector_cfg.window
        self.scalers = scalers
        self.bank = bank
        if bank:
            self.tracked: Tuple[str, ...] = ALL_MONITORED
        else:
            tracked = dict.fromkeys(("F16",) + self.set_features)
            self.tracked = tuple(f for f in ALL_MONITORED if f in tracked)
        self.monitors: Dict[str, _Monitor] = {f: _Monitor() for f in self.tracked}
        self.needs_events = bank or any(f in EVENT_FEATURES for f in self.set_features)
        self.needs_congestion = bank or "F15" in self.set_features
        self.pure_thermal = not bank and set(self.set_features) <= {"F16", "F17", "F18"}
        self.m16 = self.monitors["F16"]
        self.m17 = self.monitors.get("F17")
        self.m18 = self.monitors.get("F18")
        self.prev_reported: Optional[int] = None
        self.cycles_seen = 0
        self.last_temp_dir = 0   # +1 = U, -1 = L, 0 = none yet

    def evaluate(self, reported_raw: int,
                 event_features: Optional[Dict[str, float]] = None,
                 congestion: float = 0.0, cycle: int = 0):
        """One detection cycle. Returns (level, dirs, cls, bank_row).

        Features are compared against the registers as they stood before
        this cycle; on flush cycles the registers then fold in the current
        samples. ``dirs`` maps the configured set's features to -1/0/+1;
        ``bank_row`` lists (first_out_tier, direction) per ALL_MONITORED in
        bank mode.
        """
        monitors = self.monitors
        x16 = reported_raw
        prev = self.prev_reported
        x17 = two_cycle_average(x16, prev) if prev is not None else None
        self.prev_reported = x16
        self.cycles_seen += 1
        warm = self.cycles_seen > self.warmup
        flush = (self.cycles_seen - 1) % self.window == 0

        m16 = self.m16
        pre16 = m16.wma
        if flush or pre16 is None:
            m16.observe(x16, self.t1)

        tracked = self.tracked
        values: Dict[str, Optional[int]] = {"F16": x16}
        if "F17" in monitors:
            values["F17"] = x17
        if "F18" in monitors:
            # The running-average feature is the temperature register itself.
            values["F18"] = m16.wma
        if "F15" in monitors:
            values["F15"] = self.scalers["F15"].scale(congestion)
        if "F1" in monitors:
            values["F1"] = self.scalers["F1"].scale(float(cycle))
        if event_features:
            for fid in event_features:
                if fid in monitors:
                    values[fid] = self.scalers[fid].scale(event_features[fid])
                    monitors[fid].value = values[fid]
        for fid in EVENT_FEATURES:
            if fid in monitors and fid not in values:
                values[fid] = monitors[fid].value

        tiers: Dict[str, int] = {}
        dirs_all: Dict[str, int] = {}
        needed = tracked if self.bank else self.set_features
        for fid in needed:
            value = values[fid]
            center = pre16 if fid == "F16" else monitors[fid].wma
            if value is None or center is None or not warm:
                tiers[fid] = NEVER_OUT
                dirs_all[fid] = 0
                continue
            dev = value - center
            tier = first_out_tier(center, dev)
            tiers[fid] = tier
            dirs_all[fid] = 0 if tier == NEVER_OUT else (1 if dev > 0 else -1)

        # Fold the current samples into the remaining registers on flush
        # cycles (or to seed an empty register).
        for fid in tracked:
            if fid == "F16":
                continue
            value = values[fid]
            if value is None:
                continue
            mon = monitors[fid]
            if flush or mon.wma is None:
                mon.observe(value, self.t1)
            else:
                mon.value = value

        bank_row = ([(tiers[f], dirs_all[f]) for f in ALL_MONITORED]
                    if self.bank else None)

        dirs: Dict[str, int] = {}
        level = 0
        for fid in self.set_features:
            d = dirs_all.get(fid, 0)
            if d != 0 and tiers[fid] <= self.sigma:
                dirs[fid] = d
                level += 1
            else:
                dirs[fid] = 0

        temp_dir = dirs.get(self.temp_feature, 0)
        if temp_dir != 0:
            self.last_temp_dir = temp_dir
        if level == 0:
            cls = 0
        elif temp_dir < 0:
            cls = 1
        elif temp_dir > 0:
            cls = 2
        else:
            cls = 1 if self.last_temp_dir < 0 else 2
        return level, dirs, cls, bank_row

    def evaluate_set2(self, x16: int) -> Tuple[int, int]:
        """Straight-line evaluate() for the all-temperature set; returns
        (level, predicted_class). Bit-identical to the generic path."""
        t1 = self.t1
        sigma = self.sigma
        m16, m17, m18 = self.m16, self.m17, self.m18
        prev = self.prev_reported
        self.prev_reported = x16
        self.cycles_seen += 1
        warm = self.cycles_seen > self.warmup
        flush = (self.cycles_seen - 1) % self.window == 0

        pre16 = m16.wma
        if flush or pre16 is None:
            if pre16 is None:
                m16.wma = x16
            else:
                w1 = 1 if x16 < t1 else 3
                w0 = 1 if pre16 < t1 else 3
                den = w1 + w0
                m16.wma = (2 * (w1 * x16 + w0 * pre16) + den) // (2 * den)
            m16.value = x16
            m16.seen += 1

        x17 = ((x16 + prev + 1) >> 1) if prev is not None else None
        x18 = m16.wma
        pre17 = m17.wma
        pre18 = m18.wma

        level = 0
        dir16 = 0
        if warm:
            if x17 is not None and pre17 is not None:
                dev = x17 - pre17
                d = -dev if dev < 0 else dev
                if d and (pre17 >> sigma) < d:
                    level += 1
            if pre16 is not None:
                dev = x16 - pre16
                d = -dev if dev < 0 else dev
                if d and (pre16 >> sigma) < d:
                    dir16 = 1 if dev > 0 else -1
                    level += 1
            if pre18 is not None:
                dev = x18 - pre18
                d = -dev if dev < 0 else dev
                if d and (pre18 >> sigma) < d:
                    level += 1

        if x17 is not None:
            if pre17 is None:
                m17.wma = x17
                m17.value = x17
                m17.seen += 1
            elif flush:
                w1 = 1 if x17 < t1 else 3
                w0 = 1 if pre17 < t1 else 3
                den = w1 + w0
                m17.wma = (2 * (w1 * x17 + w0 * pre17) + den) // (2 * den)
                m17.value = x17
                m17.seen += 1
            else:
                m17.value = x17
        if pre18 is None:
            m18.wma = x18
            m18.value = x18
            m18.seen += 1
        elif flush:
            w1 = 1 if x18 < t1 else 3
            w0 = 1 if pre18 < t1 else 3
            den = w1 + w0
            m18.wma = (2 * (w1 * x18 + w0 * pre18) + den) // (2 * den)
            m18.value = x18
            m18.seen += 1
        else:
            m18.value = x18

        if dir16 != 0:
            self.last_temp_dir = dir16
        if level == 0:
            cls = 0
        elif dir16 < 0:
            cls = 1
        elif dir16 > 0:
            cls = 2
        else:
            cls = 1 if self.last_temp_dir < 0 else 2
        return level, cls
