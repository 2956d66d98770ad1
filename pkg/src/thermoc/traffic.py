"""Traffic generation: background uniform-random injection and table traces.

Injection decisions are a pure function of (cycle, config, rng stream), so
two runs with the same seed produce the same traffic regardless of what the
rest of the simulation does.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .errors import TraceParseError


@dataclass(frozen=True)
class TraceEntry:
    src: int
    dst: int
    pir: float
    t_start: int
    t_stop: int


def uniform_injections(cycle: int, pir: float, n_nodes: int,
                       rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Background uniform traffic for one cycle.

    Each node independently injects one packet with probability pir; the
    destination is uniform over all other nodes (a uniform nonzero offset
    modulo the node count).
    """
    if pir <= 0.0:
        return []
    sources = np.nonzero(rng.random(n_nodes) < pir)[0]
    if len(sources) == 0:
        return []
    offsets = rng.integers(1, n_nodes, size=len(sources))
    dests = (sources + offsets) % n_nodes
    return list(zip(sources.tolist(), dests.tolist()))


def load_trace(path: str | Path, n_nodes: int) -> List[TraceEntry]:
    """Parse a whitespace-separated trace table.

    Line format: ``src dst pir t_start t_stop``; '#' starts a comment.
    """
    entries: List[TraceEntry] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 5:
                raise TraceParseError(
                    f"{path}:{lineno}: expected 5 fields 'src dst pir t_start t_stop', "
                    f"got {len(parts)}")
            try:
                src, dst = int(parts[0]), int(parts[1])
                pir = float(parts[2])
                t_start, t_stop = int(parts[3]), int(parts[4])
            except ValueError as exc:
                raise TraceParseError(f"{path}:{lineno}: {exc}") from exc
            if not 0 <= src < n_nodes or not 0 <= dst < n_nodes:
                raise TraceParseError(
                    f"{path}:{lineno}: router id out of range for {n_nodes}-node mesh")
            if src == dst:
                raise TraceParseError(f"{path}:{lineno}: src and dst must differ")
            if not 0.0 <= pir <= 1.0:
                raise TraceParseError(f"{path}:{lineno}: pir must be in [0, 1]")
            if t_start > t_stop:
                raise TraceParseError(f"{path}:{lineno}: t_start must be <= t_stop")
            entries.append(TraceEntry(src, dst, pir, t_start, t_stop))
    return entries


class TrafficSource:
    """Per-cycle injection schedule combining background and trace traffic.

    In mixed mode a trace injection takes priority over background when both
    fire for the same node in one cycle; a node never injects more than one
    packet per cycle. Pure uniform mode pre-draws whole blocks of cycles at
    once; the stream stays a pure function of (config, seed, cycle).
    """

    CHUNK = 256

    def __init__(self, mode: str, pir: float, n_nodes: int,
                 rng: np.random.Generator, trace: List[TraceEntry] | None = None):
        self.mode = mode
        self.pir = pir
        self.n_nodes = n_nodes
        self.rng = rng
        self.trace = trace or []
        self._chunk: List[List[Tuple[int, int]]] = []
        self._chunk_start = 0

    def _uniform_block(self, cycle: int) -> List[Tuple[int, int]]:
        if not (self._chunk_start <= cycle < self._chunk_start + len(self._chunk)):
            size = self.CHUNK
            mask = self.rng.random((size, self.n_nodes)) < self.pir
            rows, cols = np.nonzero(mask)
            offsets = self.rng.integers(1, self.n_nodes, size=len(cols))
            dests = (cols + offsets) % self.n_nodes
            chunk: List[List[Tuple[int, int]]] = [[] for _ in range(size)]
            for row, src, dst in zip(rows.tolist(), cols.tolist(), dests.tolist()):
                chunk[row].append((src, dst))
            self._chunk = chunk
            self._chunk_start = cycle
        return self._chunk[cycle - self._chunk_start]

    def injections(self, cycle: int) -> List[Tuple[int, int]]:
        if self.mode == "uniform":
            if self.pir <= 0.0:
                return []
            return self._uniform_block(cycle)
        out: List[Tuple[int, int]] = []
        taken = set()
        if self.mode in ("trace", "mixed"):
            for entry in self.trace:
                if entry.t_start <= cycle <= entry.t_stop and entry.src not in taken:
                    if self.rng.random() < entry.pir:
                        out.append((entry.src, entry.dst))
                        taken.add(entry.src)
        if self.mode == "mixed":
            for src, dst in uniform_injections(cycle, self.pir, self.n_nodes, self.rng):
                if src not in taken:
                    out.append((src, dst))
                    taken.add(src)
        return out
