from collections import Counter

import numpy as np
import pytest

from thermoc.config import ResponseConfig
from thermoc.mesh import DIRECTIONAL_PORTS, Port
from thermoc.response import (MODE_NORMAL, ResponseState, capacity_fraction,
                              decide, step_response)

INTERIOR = DIRECTIONAL_PORTS  # all six present


def _cfg(**kw):
    base = dict(hysteresis=16, level_hold_scale=(1.0, 1.25, 1.5))
    base.update(kw)
    return ResponseConfig(**base)


class TestDecide:
    def test_level_zero_closes_nothing(self):
        assert decide(0, INTERIOR, np.random.default_rng(0)) == set()

    def test_cardinalities(self):
        rng = np.random.default_rng(0)
        assert len(decide(1, INTERIOR, rng)) == 4
        assert len(decide(2, INTERIOR, rng)) == 5
        assert decide(3, INTERIOR, rng) == set(INTERIOR)

    def test_capped_by_present_ports(self):
        rng = np.random.default_rng(0)
        corner = (Port.E, Port.N, Port.UP)
        assert decide(1, corner, rng) == set(corner)   # min(4, 3)

    def test_local_never_closed(self):
        rng = np.random.default_rng(1)
        for level in (1, 2, 3):
            assert Port.LOCAL not in decide(level, INTERIOR, rng)

    def test_uniform_over_subsets(self):
        rng = np.random.default_rng(123)
        counts = Counter()
        for _ in range(15000):
            counts[frozenset(decide(1, INTERIOR, rng))] += 1
        assert len(counts) == 15          # C(6,4)
        expected = 15000 / 15
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        # chi-square with 14 dof: p > 0.01 means chi2 < 29.14
        assert chi2 < 29.14


class TestStepResponse:
    def test_escalation_and_capacity(self):
        state = ResponseState()
        rng = np.random.default_rng(0)
        closed, opened, rec = step_response(state, 2, INTERIOR, _cfg(), rng, 100)
        assert state.mode == 2 and len(state.closed_ports) == 5
        assert len(closed) == 5 and not opened and rec is None
        assert capacity_fraction(state, INTERIOR) == pytest.approx(1 / 6)

    def test_reopen_after_hold(self):
        cfg = _cfg(hysteresis=16)
        state = ResponseState()
        rng = np.random.default_rng(0)
        step_response(state, 3, INTERIOR, cfg, rng, 100)
        rec = None
        cycle = 101
        while rec is None:
            _, opened, rec = step_response(state, 0, INTERIOR, cfg, rng, cycle)
            cycle += 1
        # level-3 hold is hysteresis * 1.5 = 24 calm cycles
        assert rec == (cycle - 1 - 100, 3)
        assert state.mode == MODE_NORMAL and not state.closed_ports
        assert len(opened) == 6

    def test_nonzero_level_resets_calm(self):
        cfg = _cfg(hysteresis=10)
        state = ResponseState()
        rng = np.random.default_rng(0)
        step_response(state, 1, INTERIOR, cfg, rng, 0)
        for cycle in range(1, 10):
            step_response(state, 0, INTERIOR, cfg, rng, cycle)
        assert state.calm_counter == 9
        step_response(state, 1, INTERIOR, cfg, rng, 10)
        assert state.calm_counter == 0
        assert state.mode == 1

    def test_deescalation_rerandomizes_smaller_set(self):
        cfg = _cfg()
        state = ResponseState()
        rng = np.random.default_rng(0)
        step_response(state, 3, INTERIOR, cfg, rng, 0)
        assert len(state.closed_ports) == 6
        step_response(state, 1, INTERIOR, cfg, rng, 1)
        assert state.mode == 1 and len(state.closed_ports) == 4
        assert state.episode_peak == 3

    def test_peak_sets_hold(self):
        cfg = _cfg(hysteresis=16)
        state = ResponseState()
        rng = np.random.default_rng(0)
        step_response(state, 3, INTERIOR, cfg, rng, 0)
        step_response(state, 1, INTERIOR, cfg, rng, 1)   # de-escalate
        rec = None
        cycle = 2
        while rec is None:
            _, _, rec = step_response(state, 0, INTERIOR, cfg, rng, cycle)
            cycle += 1
        recovery, peak = rec
        assert peak == 3
        assert recovery == 1 + 24    # nonzero span + peak-scaled hold

    def test_level_capped_at_three(self):
        state = ResponseState()
        rng = np.random.default_rng(0)
        step_response(state, 7, INTERIOR, _cfg(), rng, 0)
        assert state.mode == 3
