"""Event log schema and CSV export.

One row is logged per flit-routing event (a flit departing a router,
including injection-side departures and final ejection). Fixed-point
quantities are quantized to three decimal places at record time, so an
exported file parses back to exactly the in-memory log.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

from .errors import SchemaError

COLUMNS = tuple(f"F{i}" for i in range(1, 20))
HEADER_LINE = ",".join(COLUMNS)

# Column index -> parser; floats are the 3-decimal fixed-point renderings.
_FLOAT_COLS = frozenset({1, 2, 3, 14, 15, 16, 17})   # F2 F3 F4 F15 F16 F17 F18

# Inclusive value ranges; None means no upper bound.
RANGES = {
    0: (0, 5_000_000),    # F1 event cycle
    1: (0.0, 3.0),        # F2 core power (W)
    2: (0.0, 99.0),       # F3 core temperature
    3: (0.0, 100.0),      # F4 core utilization (%)
    4: (0, 3600),         # F5 core frequency (MHz)
    5: (0, 256),          # F6 packet source
    6: (0, 256),          # F7 packet destination
    7: (0, 256),          # F8 current router
    8: (0, 2),            # F9 flit type
    9: (0, 14),           # F10 hop count
    10: (0, 8),           # F11 flit sequence
    11: (0, None),        # F12 packet sequence
    12: (0, 6),           # F13 receiving port
    13: (0, 6),           # F14 departing port
    14: (0.0, 100.0),     # F15 congestion (%)
    15: (0.0, 90.0),      # F16 router temperature (reported)
    16: (0.0, 90.0),      # F17 two-cycle average
    17: (0.0, 90.0),      # F18 running average
    18: (0, 2),           # F19 label
}

Row = Tuple


@dataclass(frozen=True)
class FeatureVector:
    """One logged event in column order F1..F19."""
    event_cycle: int
    core_power: float
    core_temp: float
    core_util: float
    core_freq: int
    packet_source: int
    packet_dest: int
    current_router: int
    flit_type: int
    hop_count: int
    flit_seq: int
    packet_seq: int
    recv_port: int
    depart_port: int
    congestion: float
    router_temp: float
    temp_2cycle_avg: float
    temp_running_avg: float
    label: int

    @classmethod
    def from_row(cls, row: Row) -> "FeatureVector":
        return cls(*row)

    def to_row(self) -> Row:
        return (self.event_cycle, self.core_power, self.core_temp,
                self.core_util, self.core_freq, self.packet_source,
                self.packet_dest, self.current_router, self.flit_type,
                self.hop_count, self.flit_seq, self.packet_seq,
                self.recv_port, self.depart_port, self.congestion,
                self.router_temp, self.temp_2cycle_avg,
                self.temp_running_avg, self.label)


def row_violations(row: Row) -> List[str]:
    """Range-check one row; returns a list of violated column names."""
    bad = []
    for idx, value in enumerate(row):
        lo, hi = RANGES[idx]
        if value < lo or (hi is not None and value > hi):
            bad.append(COLUMNS[idx])
    return bad


def sort_rows(rows: Iterable[Row]) -> List[Row]:
    """Deterministic export order: cycle, router, packet seq, flit seq."""
    return sorted(rows, key=lambda r: (r[0], r[7], r[11], r[10]))


def _format_value(idx: int, value) -> str:
    if idx in _FLOAT_COLS:
        return f"{value:.3f}"
    return str(value)


def export_csv(rows: Sequence[Row], path: str | Path) -> int:
    """Write the log as UTF-8 CSV with the fixed F1..F19 header.

    Returns the number of data rows written.
    """
    ordered = sort_rows(rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER_LINE + "\n")
        for row in ordered:
            fh.write(",".join(_format_value(i, v) for i, v in enumerate(row)))
            fh.write("\n")
    return len(ordered)


def load_csv(path: str | Path) -> List[Row]:
    rows: List[Row] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != HEADER_LINE:
            raise SchemaError(f"unexpected header: {header!r}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(COLUMNS):
                raise SchemaError(f"{path}:{lineno}: expected {len(COLUMNS)} columns")
            row = tuple(
                float(p) if i in _FLOAT_COLS else int(p)
                for i, p in enumerate(parts))
            rows.append(row)
    return rows
