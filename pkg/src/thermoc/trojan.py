"""Thermal sensor Trojans: two-phase reporting manipulation.

Behavior 1 under-reports during its credit phase and over-reports by the
banked amount during exploitation; Behavior 2 mirrors the signs. All
accounting runs in raw Q8.8 units against the *applied* manipulation, so
the lifetime sum of (reported - real) is exactly zero even when sensor
saturation or a non-multiple budget truncates individual steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ContractViolation
from .fixedpoint import to_raw
from .thermal import SENSOR_RAW_MAX

LABEL_NONE = 0
LABEL_B1 = 1
LABEL_B2 = 2


class Behavior(Enum):
    B1 = 1     # decrease-then-increase
    B2 = 2     # increase-then-decrease


class Phase(Enum):
    DORMANT = 0
    CREDIT = 1
    EXPLOIT = 2
    DONE = 3


@dataclass
class TrojanInstance:
    behavior: Behavior
    router_id: int
    delta_raw: int                 # per-cycle reporting offset, Q8.8
    budget_raw: int                # total credit to bank, Q8.8 deg-cycles
    start_cycle: int
    credit_raw: int = 0
    phase: Phase = Phase.DORMANT
    manipulation_sum: int = 0      # running sum of (reported - real), raw
    done_cycle: Optional[int] = None

    def activate(self) -> None:
        if self.phase is Phase.DORMANT:
            self.phase = Phase.CREDIT

    @property
    def active(self) -> bool:
        return self.phase in (Phase.CREDIT, Phase.EXPLOIT)

    @property
    def label(self) -> int:
        return LABEL_B1 if self.behavior is Behavior.B1 else LABEL_B2

    def manipulate(self, real_raw: int, cycle: int) -> int:
        """Apply one cycle of manipulation; returns the reported raw value.

        Credit banks the applied offset (capped by the remaining budget and
        by sensor saturation); exploitation spends it with the opposite sign
        until the accumulator returns to exactly zero.
        """
        if not self.active:
            raise ContractViolation(
                f"manipulate() called on {self.phase.name} instance")
        real_raw = min(max(real_raw, 0), SENSOR_RAW_MAX)
        if self.behavior is Behavior.B1:
            credit_dir, exploit_dir = -1, +1
        else:
            credit_dir, exploit_dir = +1, -1

        if self.phase is Phase.CREDIT:
            headroom = real_raw if credit_dir < 0 else SENSOR_RAW_MAX - real_raw
            applied = min(self.delta_raw, self.budget_raw - self.credit_raw, headroom)
            reported = real_raw + credit_dir * applied
            self.credit_raw += applied
            self.manipulation_sum += credit_dir * applied
            if self.credit_raw >= self.budget_raw:
                self.phase = Phase.EXPLOIT
            return reported

        headroom = real_raw if exploit_dir < 0 else SENSOR_RAW_MAX - real_raw
        applied = min(self.delta_raw, self.credit_raw, headroom)
        reported = real_raw + exploit_dir * applied
        self.credit_raw -= applied
        self.manipulation_sum += exploit_dir * applied
        if self.credit_raw == 0:
            self.phase = Phase.DONE
            self.done_cycle = cycle
        return reported


@dataclass
class AttackSchedule:
    instances: List[TrojanInstance] = field(default_factory=list)
    # Filled in by the engine as phases progress: per router, list of
    # (start, end_exclusive, label) spans of applied manipulation.
    history: Dict[int, List[Tuple[int, int, int]]] = field(default_factory=dict)

    def record(self, router_id: int, cycle: int, label: int) -> None:
        spans = self.history.setdefault(router_id, [])
        if spans and spans[-1][2] == label and spans[-1][1] == cycle:
            start, _, lab = spans[-1]
            spans[-1] = (start, cycle + 1, lab)
        else:
            spans.append((cycle, cycle + 1, label))

    def label_of(self, router_id: int, cycle: int) -> int:
        for start, end, label in self.history.get(router_id, ()):
            if start <= cycle < end:
                return label
        return LABEL_NONE


def schedule_attacks(count: int, sim_cycles: int, n_routers: int,
                     rng: np.random.Generator,
                     delta: float = 2.0, credit_cycles: int = 1500,
                     behaviors: str = "alternate",
                     start_clamp: float = 0.8) -> AttackSchedule:
    """Draw attack placements: normal in time, uniform in space.

    Start cycles come from Normal(sim_cycles/2, sim_cycles/6) clamped to
    [0, start_clamp * sim_cycles]; router ids are uniform without
    replacement (with replacement once count exceeds the mesh).
    """
    if count < 0:
        raise ContractViolation("attack count must be >= 0")
    schedule = AttackSchedule()
    if count == 0:
        return schedule
    starts = rng.normal(sim_cycles / 2.0, sim_cycles / 6.0, size=count)
    starts = np.clip(np.rint(starts), 0, int(sim_cycles * start_clamp)).astype(int)
    replace = count > n_routers
    routers = rng.choice(n_routers, size=count, replace=replace)
    delta_raw = to_raw(delta)
    budget_raw = delta_raw * credit_cycles
    for i in range(count):
        if behaviors == "b1":
            behavior = Behavior.B1
        elif behaviors == "b2":
            behavior = Behavior.B2
        else:
            behavior = Behavior.B1 if i % 2 == 0 else Behavior.B2
        schedule.instances.append(TrojanInstance(
            behavior=behavior,
            router_id=int(routers[i]),
            delta_raw=delta_raw,
            budget_raw=budget_raw,
            start_cycle=int(starts[i]),
        ))
    return schedule
