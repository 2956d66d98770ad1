"""Cycle-level simulation engine.

Per cycle, in order: traffic injection, wormhole flit switching, thermal
update (every ``step_cycles``), sensor manipulation by active Trojans,
per-router anomaly detection, shutdown-response update, and event logging.
All randomness flows from one root seed through subsystem-specific child
streams, so enabling or disabling Trojans or the response never perturbs
the traffic sequence.

Switching model: input-buffered wormhole routers, one flit per port per
cycle, round-robin arbitration among contending inputs, dimension-order
routing with misrouting onto another minimal port only when the preferred
port is shut down. A packet whose every minimal output is unusable is
dropped whole; drops occur only through shutdowns.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .config import SimConfig
from .detector import ALL_MONITORED, FEATURE_SETS, RouterDetector, default_scalers
from .fixedpoint import ONE
from .mesh import Mesh, OPPOSITE, Port
from .response import MODE_NORMAL, ResponseState, step_response
from .thermal import PowerJitter, SENSOR_RAW_MAX, ThermalGrid
from .trojan import AttackSchedule, Phase, TrojanInstance, schedule_attacks

HEADER, BODY, TAIL = 0, 1, 2
NO_PORT = -1
TEMP_RAW_CAP = 99 * ONE
# Opposite directional port by index (E<->W, N<->S, Up<->Down, local self).
_OPP = (1, 0, 3, 2, 5, 4, 6)


class Flit:
    __slots__ = ("kind", "packet_seq", "flit_seq", "src", "dst", "hop",
                 "inject_cycle", "arrived_cycle", "in_port", "is_tail")

    def __init__(self, kind: int, packet_seq: int, flit_seq: int, src: int,
                 dst: int, inject_cycle: int, is_tail: bool):
        self.kind = kind
        self.packet_seq = packet_seq
        self.flit_seq = flit_seq
        self.src = src
        self.dst = dst
        self.hop = 0
        self.inject_cycle = inject_cycle
        self.arrived_cycle = inject_cycle
        self.in_port = int(Port.LOCAL)
        self.is_tail = is_tail


class _PendingPacket:
    __slots__ = ("packet_seq", "dst", "next_flit", "inject_cycle")

    def __init__(self, packet_seq: int, dst: int, inject_cycle: int):
        self.packet_seq = packet_seq
        self.dst = dst
        self.next_flit = 0
        self.inject_cycle = inject_cycle


@dataclass
class Counters:
    injected_packets: int = 0
    delivered_packets: int = 0
    dropped_packets: int = 0
    injected_flits: int = 0
    delivered_flits: int = 0
    dropped_flits: int = 0
    routed_flits: int = 0           # flit departures, the logged event count

    @property
    def in_flight_packets(self) -> int:
        return self.injected_packets - self.delivered_packets - self.dropped_packets


@dataclass
class RunResult:
    cfg: SimConfig
    mode: str
    counters: Counters
    reported_hist: np.ndarray        # int16 raw Q8.8, [routers, cycles]
    true_hist: np.ndarray            # int16 raw Q8.8, [routers, cycles]
    truth: np.ndarray                # int8 labels, [routers, cycles]
    preds: np.ndarray                # int8 predicted class, [routers, cycles]
    levels: np.ndarray               # int8 anomaly level, [routers, cycles]
    episodes: List[Tuple[int, int, int, int]]  # (router, start, recovery, peak)
    attacked_routers: List[int]
    hop_samples: List[Tuple[int, int, int]]    # (src, dst, hops) per delivery
    schedule: AttackSchedule
    closed_cardinality_violations: int = 0
    drop_events: Optional[List[Tuple[int, int]]] = None
    bank_tiers: Optional[np.ndarray] = None    # int8, [routers, cycles, features]
    bank_dirs: Optional[np.ndarray] = None
    event_rows: Optional[list] = None


class World:
    """One self-contained simulation instance."""

    def __init__(self, cfg: SimConfig, mode: str = "mitigated",
                 bank: bool = False, collect_events: bool = False):
        cfg.validate()
        if mode not in ("baseline", "attack", "mitigated"):
            raise ValueError(f"unknown scenario mode: {mode}")
        self.cfg = cfg
        self.mode = mode
        self.trojan_enabled = mode in ("attack", "mitigated")
        self.response_enabled = cfg.response.enabled and mode == "mitigated"
        self.bank = bank
        self.collect_events = collect_events or cfg.dataset.enabled

        self.mesh = Mesh(cfg.dims)
        n = self.mesh.n
        self.n = n
        self.cycle = 0

        seeds = np.random.SeedSequence(cfg.seed).spawn(4)
        self.rng_traffic = np.random.default_rng(seeds[0])
        self.rng_trojan = np.random.default_rng(seeds[1])
        self.rng_response = np.random.default_rng(seeds[2])
        self.rng_jitter = np.random.default_rng(seeds[3])

        from .traffic import TrafficSource, load_trace
        trace = None
        if cfg.traffic.mode in ("trace", "mixed"):
            trace = load_trace(cfg.traffic.trace_path, n)
        self.traffic = TrafficSource(cfg.traffic.mode, cfg.traffic.pir, n,
                                     self.rng_traffic, trace)

        self.grid = ThermalGrid(self.mesh, cfg.thermal)
        self.jitter = PowerJitter(n, cfg.thermal, self.rng_jitter)
        self.activity = [0] * n
        self.inject_count = [0] * n
        self.core_temp = self.grid.temps.copy()
        self.power_activity = np.full(n, cfg.thermal.p_idle)
        # Thermal-management throttle: per-router core frequency factor and
        # the flit-emission token budget it meters. Start at the frequency
        # whose equilibrium sits at the throttle setpoint, and start the
        # tiles there too, so runs open near steady state.
        th = cfg.thermal
        if th.dtm_enabled and th.p_core > 0 and th.beta > 0:
            f0 = (th.beta * (th.dtm_t_hot - th.t_ambient) / th.alpha - th.p_idle) \
                / th.p_core
            f0 = min(1.0, max(th.dtm_f_min, f0))
            self.throttle = [f0] * n
            t0 = min(th.dtm_t_hot, 99.0)
            self.grid.temps[:] = int(round(t0 * ONE))
        else:
            self.throttle = [1.0] * n
            if th.beta > 0:
                t0 = min(th.t_ambient + th.alpha * (th.p_idle + th.p_core) / th.beta,
                         99.0)
                self.grid.temps[:] = int(round(t0 * ONE))
        self._trickle_budget = [1.0] * n
        # Dimension-order routing table: _route[src][dst] -> port id.
        self._route = [[int(self.mesh.route_port(s, d)) for d in range(n)]
                       for s in range(n)]

        # The attack schedule is derived in every mode (the attacked-router
        # set anchors cross-mode metric slices); manipulation only runs when
        # the mode enables it.
        self.max_hops = sum(d - 1 for d in cfg.dims)
        self.schedule = schedule_attacks(
            cfg.trojan.count, cfg.sim_cycles, n, self.rng_trojan,
            delta=cfg.trojan.delta, credit_cycles=cfg.trojan.credit_cycles,
            behaviors=cfg.trojan.behaviors, start_clamp=cfg.trojan.start_clamp)
        self.router_instances: Dict[int, List[TrojanInstance]] = {}
        for inst in self.schedule.instances:
            self.router_instances.setdefault(inst.router_id, []).append(inst)
        for lst in self.router_instances.values():
            lst.sort(key=lambda i: i.start_cycle)

        scalers = default_scalers(n, cfg.sim_cycles, max(1, self.max_hops))
        self.detectors = [RouterDetector(cfg.detector, scalers, bank=bank)
                          for _ in range(n)]
        self.responses = [ResponseState() for _ in range(n)]
        self.closed: List[Set[Port]] = [rs.closed_ports for rs in self.responses]
        self._active_responses: Set[int] = set()

        depth = cfg.buffer_depth
        self.buffers: List[List[deque]] = [[deque() for _ in range(7)] for _ in range(n)]
        self.occupancy = [0] * n
        self.total_slots = [(len(self.mesh.present_ports[r]) + 1) * depth
                            for r in range(n)]
        self.out_owner: List[List[int]] = [[NO_PORT] * 7 for _ in range(n)]
        self.out_packet: List[List[int]] = [[-1] * 7 for _ in range(n)]
        self.in_route: List[List[int]] = [[NO_PORT] * 7 for _ in range(n)]
        self.out_mask = [0] * n          # bit per output port holding a circuit
        self.rr = [[0] * 7 for _ in range(n)]
        self.pending: List[deque] = [deque() for _ in range(n)]
        self.active: Set[int] = set()
        self._has_pending: Set[int] = set()
        self._n_closed = 0            # closed ports network-wide
        self._det_active: Set[int] = set(range(n))
        self._need_events = bank or any(
            f in ("F6", "F7", "F8", "F10")
            for f in FEATURE_SETS[cfg.detector.feature_set])

        self.next_packet_seq = 0
        self.live: Set[int] = set()
        self.poisoned: Set[int] = set()
        self.counters = Counters()

        cycles = cfg.sim_cycles
        self.reported_hist = np.zeros((n, cycles), dtype=np.int16)
        self.true_hist = np.zeros((n, cycles), dtype=np.int16)
        self.truth = np.zeros((n, cycles), dtype=np.int8)
        self.preds = np.zeros((n, cycles), dtype=np.int8)
        self.levels = np.zeros((n, cycles), dtype=np.int8)
        if bank:
            self.bank_tiers = np.zeros((n, cycles, len(ALL_MONITORED)), dtype=np.int8)
            self.bank_dirs = np.zeros((n, cycles, len(ALL_MONITORED)), dtype=np.int8)
        else:
            self.bank_tiers = None
            self.bank_dirs = None

        self.base_report = np.minimum(self.grid.temps, SENSOR_RAW_MAX).astype(np.int64)
        self._base_report_list: List[int] = self.base_report.tolist()
        self._true_report = self.base_report.astype(np.int16)
        self.report_override: Dict[int, int] = {}

        self.episodes: List[Tuple[int, int, int, int]] = []
        self.drop_events: List[Tuple[int, int]] = []   # (router, cycle) per packet
        self.hop_samples: List[Tuple[int, int, int]] = []
        self.event_rows: Optional[list] = [] if self.collect_events else None
        self._pending_rows: list = []
        self._last_event: Dict[int, Tuple[int, int, int]] = {}
        self._nonzero_levels: Dict[int, int] = {}
        self.closed_cardinality_violations = 0

    # ------------------------------------------------------------------
    # helpers

    def reported_raw(self, rid: int) -> int:
        value = self.report_override.get(rid)
        if value is None:
            return self._base_report_list[rid]
        return value

    def congestion_of(self, rid: int) -> float:
        pct = 100.0 * self.occupancy[rid] / self.total_slots[rid]
        return min(100.0, max(0.0, pct))

    def _port_usable(self, rid: int, port: int) -> bool:
        if port == Port.LOCAL:
            return True
        if port in self.closed[rid]:
            return False
        nbr = self.mesh.neighbor[rid][port]
        if nbr < 0:
            return False
        return OPPOSITE[port] not in self.closed[nbr]

    def _poison(self, packet_seq: int, rid: int = -1) -> None:
        if packet_seq in self.poisoned:
            return
        self.poisoned.add(packet_seq)
        if packet_seq in self.live:
            self.live.discard(packet_seq)
            self.counters.dropped_packets += 1
            self.drop_events.append((rid, self.cycle))

    def _release_circuit_from_input(self, rid: int, in_port: int) -> None:
        out = self.in_route[rid][in_port]
        if out != NO_PORT:
            self.out_owner[rid][out] = NO_PORT
            self.out_packet[rid][out] = -1
            self.in_route[rid][in_port] = NO_PORT
            self.out_mask[rid] &= ~(1 << out)

    def _drain_poisoned_head(self, rid: int, port: int) -> Optional[Flit]:
        """Discard poisoned flits at the head of a buffer; return live head."""
        buf = self.buffers[rid][port]
        while buf:
            head = buf[0]
            if head.packet_seq in self.poisoned:
                buf.popleft()
                self.occupancy[rid] -= 1
                self.counters.dropped_flits += 1
                out = self.in_route[rid][port]
                if out != NO_PORT and self.out_packet[rid][out] == head.packet_seq:
                    self._release_circuit_from_input(rid, port)
            else:
                return head
        return None

    def _close_port(self, rid: int, port: Port) -> None:
        """Power-gate one port: drop its buffered flits, tear its circuits."""
        self._n_closed += 1
        buf = self.buffers[rid][port]
        for flit in buf:
            self._poison(flit.packet_seq, rid)
        self.counters.dropped_flits += len(buf)
        self.occupancy[rid] -= len(buf)
        buf.clear()
        self._release_circuit_from_input(rid, port)
        owner = self.out_owner[rid][port]
        if owner != NO_PORT:
            self._poison(self.out_packet[rid][port], rid)
            self.out_owner[rid][port] = NO_PORT
            self.out_packet[rid][port] = -1
            self.in_route[rid][owner] = NO_PORT
            self.out_mask[rid] &= ~(1 << port)

    # ------------------------------------------------------------------
    # per-cycle phases

    def _inject(self, cycle: int) -> None:
        for src, dst in self.traffic.injections(cycle):
            seq = self.next_packet_seq
            self.next_packet_seq += 1
            self.pending[src].append(_PendingPacket(seq, dst, cycle))
            self.live.add(seq)
            self.counters.injected_packets += 1
            self.inject_count[src] += 1
            self.active.add(src)
            self._has_pending.add(src)

    def _trickle(self) -> None:
        if not self._has_pending:
            return
        fpp = self.cfg.flits_per_packet
        depth = self.cfg.buffer_depth
        cycle = self.cycle
        budgets = self._trickle_budget
        done = []
        for rid in self._has_pending:
            queue = self.pending[rid]
            while queue and queue[0].packet_seq in self.poisoned:
                queue.popleft()
            if not queue:
                done.append(rid)
                continue
            budget = budgets[rid] + self.throttle[rid]
            if budget > 2.0:
                budget = 2.0
            if budget < 1.0:
                budgets[rid] = budget
                continue
            buf = self.buffers[rid][6]
            if len(buf) >= depth:
                budgets[rid] = budget
                continue
            budgets[rid] = budget - 1.0
            pkt = queue[0]
            seq = pkt.next_flit
            kind = HEADER if seq == 0 else (TAIL if seq == fpp - 1 else BODY)
            flit = Flit(kind, pkt.packet_seq, seq, rid, pkt.dst,
                        pkt.inject_cycle, is_tail=(seq == fpp - 1))
            flit.arrived_cycle = cycle
            buf.append(flit)
            self.occupancy[rid] += 1
            self.counters.injected_flits += 1
            self.active.add(rid)
            pkt.next_flit += 1
            if pkt.next_flit >= fpp:
                queue.popleft()
                if not queue:
                    done.append(rid)
        for rid in done:
            self._has_pending.discard(rid)

    def _choose_output(self, rid: int, flit: Flit) -> int:
        """Routing with shutdown awareness: the dimension-order port when
        usable, otherwise another minimal port, otherwise NO_PORT (drop)."""
        if self._n_closed == 0:
            return self._route[rid][flit.dst]
        if flit.dst == rid:
            return int(Port.LOCAL)
        for port in self.mesh.minimal_ports(rid, flit.dst):
            if self._port_usable(rid, port):
                return int(port)
        return NO_PORT

    def _move_flit(self, rid: int, in_port: int, out_port: int, flit: Flit) -> None:
        self.buffers[rid][in_port].popleft()
        self.occupancy[rid] -= 1
        self.counters.routed_flits += 1
        self.activity[rid] += 1
        if self.collect_events:
            self._pending_rows.append((rid, in_port, out_port, flit.kind,
                                       flit.packet_seq, flit.flit_seq, flit.src,
                                       flit.dst, flit.hop))
        if self._need_events:
            self._last_event[rid] = (flit.src, flit.dst, flit.hop)
        if out_port == 6:
            self.counters.delivered_flits += 1
            if flit.is_tail:
                self.counters.delivered_packets += 1
                self.live.discard(flit.packet_seq)
                if len(self.hop_samples) < 200000:
                    self.hop_samples.append((flit.src, flit.dst, flit.hop))
            return
        nbr = self.mesh.neighbor[rid][out_port]
        flit.hop += 1
        flit.arrived_cycle = self.cycle
        flit.in_port = _OPP[out_port]
        self.buffers[nbr][flit.in_port].append(flit)
        self.occupancy[nbr] += 1
        self.active.add(nbr)

    def _switch(self) -> None:
        cycle = self.cycle
        depth = self.cfg.buffer_depth
        self._last_event = {}
        if not self.active:
            return
        poisoned = self.poisoned
        buffers = self.buffers
        neighbor = self.mesh.neighbor
        any_closed = self._n_closed > 0
        opposite = _OPP
        for rid in sorted(self.active):
            if self.occupancy[rid] <= 0:
                if not self.pending[rid]:
                    self.active.discard(rid)
                continue
            out_owner = self.out_owner[rid]
            out_packet = self.out_packet[rid]
            in_route = self.in_route[rid]
            bufs = buffers[rid]
            moved_in = 0
            # Advance established circuits, one flit per output port.
            mask = self.out_mask[rid]
            while mask:
                low = mask & -mask
                mask ^= low
                out_port = low.bit_length() - 1
                in_port = out_owner[out_port]
                if in_port == NO_PORT:
                    continue
                buf = bufs[in_port]
                if not buf:
                    continue
                head = buf[0]
                if poisoned and head.packet_seq in poisoned:
                    head = self._drain_poisoned_head(rid, in_port)
                    if head is None:
                        continue
                if head.packet_seq != out_packet[out_port]:
                    continue
                if head.arrived_cycle >= cycle:
                    continue
                if out_port != 6:
                    if any_closed and not self._port_usable(rid, out_port):
                        # The wormhole was severed by a downstream shutdown.
                        self._poison(head.packet_seq, rid)
                        self._drain_poisoned_head(rid, in_port)
                        continue
                    if len(buffers[neighbor[rid][out_port]][opposite[out_port]]) >= depth:
                        continue
                is_tail = head.is_tail
                self._move_flit(rid, in_port, out_port, head)
                moved_in |= 1 << in_port
                if is_tail:
                    out_owner[out_port] = NO_PORT
                    out_packet[out_port] = -1
                    in_route[in_port] = NO_PORT
                    self.out_mask[rid] &= ~(1 << out_port)
            # Allocate circuits for waiting header flits.
            requests: Dict[int, List[int]] = {}
            for in_port in range(7):
                if in_route[in_port] != NO_PORT or moved_in & (1 << in_port):
                    continue
                buf = bufs[in_port]
                if not buf:
                    continue
                head = buf[0]
                if poisoned and head.packet_seq in poisoned:
                    head = self._drain_poisoned_head(rid, in_port)
                    if head is None:
                        continue
                if head.kind != HEADER or head.arrived_cycle >= cycle:
                    continue
                out_port = self._choose_output(rid, head)
                if out_port == NO_PORT:
                    self._poison(head.packet_seq, rid)
                    self._drain_poisoned_head(rid, in_port)
                    continue
                prev = requests.get(out_port)
                if prev is None:
                    requests[out_port] = [in_port]
                else:
                    prev.append(in_port)
            for out_port, ports in requests.items():
                if out_owner[out_port] != NO_PORT:
                    continue
                if out_port != 6:
                    if len(buffers[neighbor[rid][out_port]][opposite[out_port]]) >= depth:
                        continue
                if len(ports) == 1:
                    grant = ports[0]
                else:
                    pointer = self.rr[rid][out_port]
                    grant = min(ports, key=lambda p: (p - pointer) % 7)
                self.rr[rid][out_port] = (grant + 1) % 7
                head = bufs[grant][0]
                if not head.is_tail:
                    out_owner[out_port] = grant
                    out_packet[out_port] = head.packet_seq
                    in_route[grant] = out_port
                    self.out_mask[rid] |= 1 << out_port
                self._move_flit(rid, grant, out_port, head)
            if self.occupancy[rid] <= 0 and not self.pending[rid]:
                self.active.discard(rid)

    def _thermal_step(self) -> None:
        cfg = self.cfg.thermal
        activity = np.asarray(self.activity, dtype=np.float64)
        # Elementwise identical to tile_power() over the activity counters.
        np.clip(cfg.p_idle + cfg.p_per_flit * activity, 0.0, 3.0,
                out=self.power_activity)
        jitter = self.jitter.step()
        core = cfg.p_core * np.asarray(self.throttle)
        self.grid.powers = np.clip(self.power_activity + core + jitter, 0.0, 3.0)
        self.grid.step()
        np.minimum(self.grid.temps, SENSOR_RAW_MAX, out=self.base_report)
        self._base_report_list = self.base_report.tolist()
        self._true_report = self.base_report.astype(np.int16)
        offsets = np.minimum(
            np.rint(np.asarray(self.inject_count) * cfg.core_offset_per_inject * ONE),
            int(cfg.core_offset_max * ONE)).astype(np.int64)
        np.clip(self.grid.temps + offsets, 0, TEMP_RAW_CAP, out=self.core_temp)
        self.activity = [0] * self.n
        self.inject_count = [0] * self.n
        if cfg.dtm_enabled:
            hot = cfg.dtm_t_hot * ONE
            cool = (cfg.dtm_t_hot - cfg.dtm_deadband) * ONE
            step = cfg.dtm_step
            f_min = cfg.dtm_f_min
            throttle = self.throttle
            responses = self.responses
            for rid in range(self.n):
                if responses[rid].mode != MODE_NORMAL:
                    # Quarantined: the sensor is distrusted, so the throttle
                    # holds its last safe operating point.
                    continue
                reported = self.reported_raw(rid)
                if reported > hot:
                    f = throttle[rid] - step
                    throttle[rid] = f if f > f_min else f_min
                elif reported < cool:
                    f = throttle[rid] + step
                    throttle[rid] = f if f < 1.0 else 1.0
        # Every sensor sample changed; every detector must re-evaluate.
        self._det_active.update(range(self.n))

    def _trojan_phase(self) -> None:
        cycle = self.cycle
        if self.report_override:
            # Routers losing their override see the sensor jump back.
            self._det_active.update(self.report_override)
            self.report_override.clear()
        if not self.trojan_enabled:
            return
        for rid in self.router_instances:
            inst = None
            for candidate in self.router_instances[rid]:
                if candidate.phase is Phase.DONE:
                    continue
                if candidate.phase is Phase.DORMANT:
                    if cycle >= candidate.start_cycle:
                        candidate.activate()
                    else:
                        break
                inst = candidate
                break
            if inst is None or not inst.active:
                continue
            real = self._base_report_list[rid]
            reported = inst.manipulate(real, cycle)
            self.report_override[rid] = reported
            self._det_active.add(rid)
            label = inst.label
            self.truth[rid, cycle] = label
            self.schedule.record(rid, cycle, label)

    def _detector_phase(self) -> None:
        cycle = self.cycle
        preds = self.preds
        levels = self.levels
        events = self._last_event
        override = self.report_override
        base = self._base_report_list
        nonzero = self._nonzero_levels
        nonzero.clear()
        if self._need_events and events:
            self._det_active.update(events)
        if not self._det_active:
            return
        settled = []
        for rid in sorted(self._det_active):
            det = self.detectors[rid]
            x = override.get(rid)
            if x is None:
                x = base[rid]
            if det.pure_thermal:
                level, cls = det.evaluate_set2(x)
                bank_row = None
            else:
                event_features = None
                if det.needs_events:
                    ev = events.get(rid)
                    if ev is not None:
                        event_features = {"F6": float(ev[0]), "F7": float(ev[1]),
                                          "F10": float(ev[2]), "F8": float(rid)}
                congestion = self.congestion_of(rid) if det.needs_congestion else 0.0
                level, _dirs, cls, bank_row = det.evaluate(
                    x, event_features, congestion, cycle)
            if level:
                levels[rid, cycle] = level
                preds[rid, cycle] = cls
                nonzero[rid] = level
            if bank_row is not None:
                self.bank_tiers[rid, cycle] = [t for t, _ in bank_row]
                self.bank_dirs[rid, cycle] = [d for _, d in bank_row]
            elif det.pure_thermal and level == 0 and rid not in override \
                    and det.cycles_seen > det.warmup:
                # A settled all-temperature detector with an unchanged sensor
                # sample needs no re-evaluation until the sample moves: all
                # deviations are at most one LSB, far inside every tier.
                w16 = det.m16.wma
                w17 = det.m17.wma if det.m17 is not None else x
                w18 = det.m18.wma if det.m18 is not None else w16
                if w16 is not None and w17 is not None and w18 is not None \
                        and -1 <= w16 - x <= 1 and -1 <= w17 - x <= 1 \
                        and -1 <= w18 - w16 <= 1:
                    settled.append(rid)
        for rid in settled:
            self._det_active.discard(rid)

    def _response_phase(self) -> None:
        if not self.response_enabled:
            return
        cycle = self.cycle
        cfg = self.cfg.response
        touched = self._active_responses | set(self._nonzero_levels)
        if not touched:
            return
        for rid in sorted(touched):
            state = self.responses[rid]
            level = self._nonzero_levels.get(rid, 0)
            present = self.mesh.present_ports[rid]
            newly_closed, newly_opened, recovered = step_response(
                state, level, present, cfg, self.rng_response, cycle)
            self._n_closed -= len(newly_opened)
            for port in sorted(newly_closed):
                self._close_port(rid, port)
            if recovered is not None:
                self.episodes.append((rid, cycle - recovered[0],
                                      recovered[0], recovered[1]))
            if state.mode != MODE_NORMAL:
                self._active_responses.add(rid)
                want = {1: 4, 2: 5, 3: 6}[state.mode]
                expect = min(want, len(present))
                if len(state.closed_ports) != expect:
                    self.closed_cardinality_violations += 1
            else:
                self._active_responses.discard(rid)

    def _finalize_rows(self) -> None:
        if not self._pending_rows:
            return
        cycle = self.cycle
        rows = self.event_rows
        for (rid, in_port, out_port, kind, pkt, fseq, src, dst, hop) in self._pending_rows:
            det = self.detectors[rid]
            f16 = self.reported_raw(rid)
            prev = det.prev_reported if det.prev_reported is not None else f16
            f17 = (f16 + prev + 1) >> 1
            wma16 = det.monitors["F16"].wma
            f18 = wma16 if wma16 is not None else f16
            util = min(100.0, 25.0 * len(self.pending[rid]))
            rows.append((
                cycle,
                round(float(self.power_activity[rid]), 3),
                round(int(self.core_temp[rid]) / ONE, 3),
                round(util, 3),
                int(round(3600 * self.throttle[rid])) if self.cfg.thermal.dtm_enabled else 3600,
                src, dst, rid, kind, hop, fseq, pkt,
                in_port, out_port,
                round(self.congestion_of(rid), 3),
                round(f16 / ONE, 3),
                round(f17 / ONE, 3),
                round(f18 / ONE, 3),
                int(self.truth[rid, cycle]),
            ))
        self._pending_rows.clear()

    def step_cycle(self) -> None:
        cycle = self.cycle
        self._inject(cycle)
        self._trickle()
        self._switch()
        if (cycle + 1) % self.cfg.thermal.step_cycles == 0:
            self._thermal_step()
        self._trojan_phase()
        self._detector_phase()
        self._response_phase()
        self.reported_hist[:, cycle] = self.base_report
        for rid, value in self.report_override.items():
            self.reported_hist[rid, cycle] = value
        self.true_hist[:, cycle] = self._true_report
        if self.collect_events:
            self._finalize_rows()
        self.cycle += 1

    def scan_in_flight(self) -> Set[int]:
        """Recount live packets from the buffers and injection queues."""
        seen: Set[int] = set()
        for rid in range(self.n):
            for pkt in self.pending[rid]:
                if pkt.packet_seq not in self.poisoned:
                    seen.add(pkt.packet_seq)
            for buf in self.buffers[rid]:
                for flit in buf:
                    if flit.packet_seq not in self.poisoned:
                        seen.add(flit.packet_seq)
        return seen

    def run(self, checkpoint_hook=None, checkpoint_every: int = 1000) -> RunResult:
        for _ in range(self.cfg.sim_cycles):
            self.step_cycle()
            if checkpoint_hook is not None and self.cycle % checkpoint_every == 0:
                checkpoint_hook(self)
        attacked = sorted({inst.router_id for inst in self.schedule.instances})
        return RunResult(
            cfg=self.cfg,
            mode=self.mode,
            counters=self.counters,
            reported_hist=self.reported_hist,
            true_hist=self.true_hist,
            truth=self.truth,
            preds=self.preds,
            levels=self.levels,
            episodes=self.episodes,
            attacked_routers=attacked,
            hop_samples=self.hop_samples,
            schedule=self.schedule,
            closed_cardinality_violations=self.closed_cardinality_violations,
            drop_events=self.drop_events,
            bank_tiers=self.bank_tiers,
            bank_dirs=self.bank_dirs,
            event_rows=self.event_rows,
        )
