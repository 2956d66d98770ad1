"""Port Shutdown Decision Module: graduated random shutdown with hysteresis.

Anomaly level 1 closes four directional ports chosen uniformly at random,
level 2 closes five, level 3 closes all of them; the local core port never
closes. Edge routers close at most the ports they physically have. After a
shutdown the router must observe a sustained run of level-0 evaluations
before everything reopens; deeper shutdowns require a proportionally longer
calm run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Set, Tuple

import numpy as np

from .config import ResponseConfig
from .mesh import Port

MODE_NORMAL = 0


def decide(level: int, present_ports: Sequence[Port],
           rng: np.random.Generator) -> Set[Port]:
    """Choose the directional ports to close for an anomaly level.

    Level 1 -> 4 ports, level 2 -> 5 ports, level 3 -> all, each capped by
    the ports physically present; selection is uniform over the subsets.
    """
    if level <= 0:
        return set()
    want = {1: 4, 2: 5, 3: 6}[min(level, 3)]
    count = min(want, len(present_ports))
    if count == len(present_ports):
        return set(present_ports)
    picked = rng.choice(len(present_ports), size=count, replace=False)
    return {present_ports[i] for i in picked}


@dataclass
class ResponseState:
    """Per-router shutdown mode, closed set, and reopen hysteresis."""
    mode: int = MODE_NORMAL            # 0 = Normal, 1..3 = shutdown depth
    closed_ports: Set[Port] = field(default_factory=set)
    calm_counter: int = 0
    episode_start: int = -1            # cycle of the first nonzero level
    episode_peak: int = 0              # deepest mode reached this episode

    @property
    def shutdown_mask(self) -> int:
        mask = 0
        for port in self.closed_ports:
            mask |= 1 << port
        return mask


def step_response(state: ResponseState, level: int, present_ports: Sequence[Port],
                  cfg: ResponseConfig, rng: np.random.Generator,
                  cycle: int) -> Tuple[Set[Port], Set[Port], int]:
    """Advance the state machine one cycle.

    Returns (newly_closed, newly_opened, completed_episode) where the last
    value is (recovery_cycles, peak_mode) on the cycle the router returns to
    Normal, else None.
    """
    level = min(level, 3)
    before = state.closed_ports
    recovered = None

    if level > 0:
        if state.mode == MODE_NORMAL:
            state.episode_start = cycle
            state.episode_peak = 0
        if level != state.mode:
            # Escalation and de-escalation between nonzero levels both take
            # effect immediately with a re-randomized closed set.
            state.mode = level
            state.closed_ports = decide(level, present_ports, rng)
        if level > state.episode_peak:
            state.episode_peak = level
        state.calm_counter = 0
    elif state.mode != MODE_NORMAL:
        state.calm_counter += 1
        # The deepest shutdown reached sets how much sustained calm the
        # episode needs before everything reopens.
        if state.calm_counter >= cfg.hold_for_mode(max(state.episode_peak, state.mode)):
            recovered = (cycle - state.episode_start, state.episode_peak)
            state.mode = MODE_NORMAL
            state.closed_ports = set()
            state.calm_counter = 0
            state.episode_start = -1
            state.episode_peak = 0

    after = state.closed_ports
    newly_closed = after - before
    newly_opened = before - after
    return newly_closed, newly_opened, recovered


def capacity_fraction(state: ResponseState, present_ports: Sequence[Port]) -> float:
    """Fraction of directional capacity still open (1.0 when Normal)."""
    if not present_ports:
        return 1.0
    open_count = len([p for p in present_ports if p not in state.closed_ports])
    return open_count / len(present_ports)


__all__ = ["MODE_NORMAL", "ResponseState", "decide", "step_response",
           "capacity_fraction"]
