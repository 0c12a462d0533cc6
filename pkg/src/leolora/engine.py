"""Deterministic discrete-event loop: nodes, gateways, collisions, batteries.

Metrics are a pure function of (scenario, seed).  Events are processed in
strictly increasing (time, sequence) order; sequence numbers are assigned
at scheduling time, so simultaneous events resolve first-scheduled-first.

Accounting is retrospective: the slot tick at time T settles the slot
[T - slot, T), by which point every transmission attempt inside it has
already happened.  Packets queue until the next tick of their node's
(randomly offset, unsynchronized) slot grid, where the MAC decides them.
"""

from __future__ import annotations

import bisect
import enum
import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .airtime import time_on_air
from .battery import (
    BatteryState,
    CycleStress,
    DegradationParams,
    ThermalProfile,
    calendar_aging,
    cycle_aging,
    linear_degradation,
    sei_capacity_fade,
)
from .config import BatteryScenario, ScenarioConfig
from .energy import NodeEnergyState, PowerProfile, energy_step, ewma_update
from .exceptions import ContractError
from .mac import (
    DropReason,
    SelectionResult,
    TxDecision,
    report_battery_summary,
    run_transmission_sequence,
    select_forecast_window,
)
from .orbit import (
    ECLIPSE,
    SUN,
    ForecastWindow,
    OrbitConfig,
    Schedule,
    build_schedule,
    load_schedule_override,
    phase_at,
    sun_seconds,
)
from .report import NodeBatteryReport

# A naive sender keeps retrying over at most this span before giving up.
MAX_NAIVE_SPAN_S = 1800.0


class EventKind(enum.Enum):
    PHASE_CHANGE = "phase_change"
    WINDOW_OPEN = "window_open"
    WINDOW_CLOSE = "window_close"
    TX_ATTEMPT_START = "tx_attempt_start"
    TX_ATTEMPT_END = "tx_attempt_end"
    SLOT_TICK = "slot_tick"
    REPORT_DUE = "report_due"
    BROWNOUT_RECOVERY = "brownout_recovery"


@dataclass(frozen=True, order=True)
class SimEvent:
    time: float
    sequence: int
    kind: EventKind = field(compare=False)
    payload: tuple = field(compare=False, default=())


@dataclass(frozen=True)
class TxAttempt:
    """One on-air attempt as seen by a receiver."""

    start: float
    airtime: float
    channel: int
    sf: int
    receiver: str


def resolve_collisions(attempts: list[TxAttempt]) -> list[bool]:
    """Per-attempt success under the pairwise-overlap collision law.

    Two attempts destroy each other iff their airtime intervals overlap at
    the same receiver on the same channel and spreading factor; there is no
    capture effect.  Different (receiver, channel, sf) groups never
    interact.
    """
    success = [True] * len(attempts)
    groups: dict[tuple, list[int]] = {}
    for i, a in enumerate(attempts):
        groups.setdefault((a.receiver, a.channel, a.sf), []).append(i)
    for idx in groups.values():
        idx.sort(key=lambda i: attempts[i].start)
        active: list[tuple[float, int]] = []  # (end, index) min-heap
        for i in idx:
            a = attempts[i]
            while active and active[0][0] <= a.start:
                heapq.heappop(active)
            if active:
                success[i] = False
                for _, j in active:
                    success[j] = False
            heapq.heappush(active, (a.start + a.airtime, i))
    return success


@dataclass(frozen=True)
class DegradationAssessment:
    """Gateway-side fade figures for one node."""

    node_id: int
    dc_cal: float
    dc_cycle: float
    d_linear: float
    fade_fraction: float


def gateway_compute_fleet_degradation(
    reports: list[NodeBatteryReport],
    params: DegradationParams,
    soc_reference: float,
    c_rate_reference: float,
    dod_reference: float = 0.4,
) -> dict[int, DegradationAssessment]:
    """Apply the fade pipeline to each node's reported usage summaries.

    Calendar aging is evaluated at the reported sunlit-phase temperature
    and the configured reference SoC.  Each DoD observation covers one
    orbit's discharge; its equivalent cycle count is dod / dod_reference,
    the same fractional-cycle convention the nodes accrue by, so gateway
    and node-side figures agree exactly.  Overlapping report periods for
    one node are rejected.
    """
    by_node: dict[int, list[NodeBatteryReport]] = {}
    for r in reports:
        by_node.setdefault(r.node_id, []).append(r)

    out: dict[int, DegradationAssessment] = {}
    for node_id in sorted(by_node):
        node_reports = sorted(by_node[node_id], key=lambda r: r.period_start)
        prev_end = -math.inf
        dc_cal = 0.0
        dc_cycle = 0.0
        for r in node_reports:
            if r.period_start < prev_end:
                raise ValueError(
                    f"node {node_id}: report period starting at {r.period_start} "
                    f"overlaps the previous period ending at {prev_end}"
                )
            prev_end = r.period_end
            dc_cal += calendar_aging(
                params, r.mean_temperature_sun_k, soc_reference, r.period_days
            )
            for dod in r.dod_observations:
                dc_cycle += cycle_aging(
                    params,
                    CycleStress(dod=dod, c_rate=c_rate_reference,
                                temperature_k=r.mean_temperature_eclipse_k),
                    dod / dod_reference,
                )
        d_linear = linear_degradation(dc_cal, dc_cycle)
        out[node_id] = DegradationAssessment(
            node_id=node_id,
            dc_cal=dc_cal,
            dc_cycle=dc_cycle,
            d_linear=d_linear,
            fade_fraction=sei_capacity_fade(params, d_linear),
        )
    return out


@dataclass
class OrbitLedger:
    """Charge/discharge totals accumulated over (roughly) one orbit."""

    duration_s: float = 0.0
    discharge_j: float = 0.0
    harvest_j: float = 0.0
    consumption_j: float = 0.0
    soc_time_integral: float = 0.0


def step_battery_per_orbit(
    state: BatteryState,
    params: DegradationParams,
    thermal: ThermalProfile,
    ledger: OrbitLedger,
    dod_reference: float,
    c_rate_reference: float,
    soc_reference: float,
) -> float:
    """Advance the pack's degradation by one completed orbit.

    Equivalent cycles accrue as discharged energy over one reference
    cycle's energy (DoD_ref x rated pack energy); calendar time advances
    by the orbit duration at the sunlit-phase temperature and reference
    SoC.  Returns the orbit's observed depth of discharge.
    """
    days = ledger.duration_s / 86400.0
    cycle_energy_j = dod_reference * state.capacity_rated_j
    cycles_inc = ledger.discharge_j / cycle_energy_j
    dod_observed = min(ledger.discharge_j / state.capacity_rated_j, 1.0)

    dc_cal_inc = calendar_aging(params, thermal.t_sun_k, soc_reference, days)
    dc_cycle_inc = 0.0
    if cycles_inc > 0.0:
        stress = CycleStress(
            dod=dod_observed, c_rate=c_rate_reference, temperature_k=thermal.t_eclipse_k
        )
        dc_cycle_inc = cycle_aging(params, stress, cycles_inc)

    state.calendar_days += days
    state.cycles_completed += cycles_inc
    state.dc_cal_total += dc_cal_inc
    state.dc_cycle_total += dc_cycle_inc
    state.d_linear = linear_degradation(state.dc_cal_total, state.dc_cycle_total)
    state.fade_fraction = sei_capacity_fade(params, state.d_linear)
    return dod_observed


def run_degradation_curve(
    battery: BatteryScenario,
    orbit: OrbitConfig,
    profile: PowerProfile,
    slot_s: float,
    days: float,
    resolution_days: float = 1.0,
) -> tuple[list[tuple[float, float, float]], BatteryState]:
    """Quiet per-orbit fade curve: the nominal orbit cycle, no traffic.

    Each orbit discharges the platform sleep draw across the eclipse span.
    Returns (day, d_linear, fade_fraction) rows at the requested
    resolution, plus the final battery state.
    """
    if days < 0 or resolution_days <= 0:
        raise ValueError("days must be >= 0 and resolution > 0")
    state = BatteryState(
        soc=battery.soc_initial,
        capacity_rated_ah=battery.capacity_rated_ah,
        voltage_nominal_v=battery.voltage_nominal_v,
    )
    eclipse_s = orbit.period_s - orbit.sun_duration_s
    bus_rate_w = profile.e_sleep_j / slot_s
    per_orbit = OrbitLedger(duration_s=orbit.period_s, discharge_j=bus_rate_w * eclipse_s)
    n_orbits = int(math.floor(days * 86400.0 / orbit.period_s))
    rows: list[tuple[float, float, float]] = []
    next_mark = resolution_days
    for k in range(1, n_orbits + 1):
        step_battery_per_orbit(
            state, battery.params, battery.thermal, per_orbit,
            dod_reference=battery.dod_reference,
            c_rate_reference=battery.c_rate_reference,
            soc_reference=battery.soc_reference,
        )
        day = k * orbit.period_s / 86400.0
        if day >= next_mark or k == n_orbits:
            rows.append((day, state.d_linear, state.fade_fraction))
            while next_mark <= day:
                next_mark += resolution_days
    return rows, state


# ── engine internals ─────────────────────────────────────────────────────────

_DROP_COUNTER = {
    DropReason.INSUFFICIENT_ENERGY_SUN: "dropped_energy",
    DropReason.BELOW_RESERVE_ECLIPSE: "dropped_energy",
    DropReason.NO_WINDOW: "dropped_no_window",
}

METRICS_COLUMNS = (
    "time_s",
    "node_id",
    "soc",
    "fade_fraction",
    "d_linear",
    "packets_delivered",
    "packets_dropped_energy",
    "packets_dropped_collision_exhausted",
    "packets_dropped_no_window",
    "energy_harvested_j",
    "energy_consumed_j",
)


@dataclass
class MetricsRecord:
    time_s: float
    node_id: int
    soc: float
    fade_fraction: float
    d_linear: float
    packets_delivered: int
    packets_dropped_energy: int
    packets_dropped_collision_exhausted: int
    packets_dropped_no_window: int
    energy_harvested_j: float
    energy_consumed_j: float

    def as_row(self) -> tuple:
        return tuple(getattr(self, c) for c in METRICS_COLUMNS)


@dataclass(frozen=True)
class SafetyAudit:
    """Selection-time values behind one MAC decision, for invariant checks."""

    node_id: int
    time: float
    transmit: bool
    phase: str | None
    psi_j: float
    psi_min_j: float
    estimate_j: float | None
    threshold_j: float | None
    reason: DropReason | None


@dataclass
class _ActiveAttempt:
    end: float
    sf: int
    channel: int
    collided: bool = False


@dataclass
class _Packet:
    node_id: int
    packet_id: int
    created: float
    status: str = "queued"          # queued | waiting | in_flight | delivered | dropped
    drop_reason: str | None = None
    window: ForecastWindow | None = None
    tx_phase: str | None = None
    tx_slot_idx: int | None = None
    reserved_j: float = 0.0
    attempts_made: int = 0
    had_receiver: bool = False
    canceled: bool = False
    current_attempt: _ActiveAttempt | None = None


@dataclass
class _Node:
    node_id: int
    slot_s: float
    orbit: OrbitConfig
    schedule: Schedule
    energy: NodeEnergyState
    battery: BatteryState
    slot_offset: float
    account_end: float
    backoff_rng: np.random.Generator
    arrivals: list[float]
    window_starts: list[float]
    arrival_ptr: int = 0
    queue: list[_Packet] = field(default_factory=list)
    busy_until: float = 0.0
    tx_slot_info: dict[int, str] = field(default_factory=dict)
    forced_sleep: set[int] = field(default_factory=set)
    in_flight: _Packet | None = None
    ledger: OrbitLedger = field(default_factory=OrbitLedger)
    e_g_history: list[float] = field(default_factory=list)
    clamp_events: list[tuple[float, float]] = field(default_factory=list)
    brownout_count: int = 0
    # per reporting period
    period_start: float = 0.0
    period_slots: int = 0
    period_txs: int = 0
    period_energy_j: float = 0.0
    period_dods: list[float] = field(default_factory=list)
    # cumulative
    generated: int = 0
    delivered: int = 0
    dropped_energy: int = 0
    dropped_collision_exhausted: int = 0
    dropped_no_window: int = 0
    energy_harvested_j: float = 0.0
    energy_consumed_j: float = 0.0

    def slot_index(self, t: float) -> int:
        return int(math.floor((t - self.slot_offset) / self.slot_s + 1e-9))

    def slot_time(self, k: int) -> float:
        return self.slot_offset + k * self.slot_s


@dataclass
class RunResult:
    scenario: ScenarioConfig
    seed: int
    metrics: list[MetricsRecord]
    summary: dict
    audits: list[SafetyAudit]
    attempt_log: list[tuple[TxAttempt, bool]]
    reports: list[NodeBatteryReport]
    nodes: list[_Node]


class Simulator:
    """One deterministic run of a validated scenario."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        seed: int | None = None,
        schedules: dict[int, Schedule] | None = None,
    ):
        self.sc = scenario
        self.seed = scenario.sim.seed if seed is None else seed
        self.t_end = scenario.sim.duration_s
        self.slot_s = scenario.sim.slot_s
        self.toa = time_on_air(scenario.radio)
        self.profile = scenario.energy.profile
        self.harvest = scenario.energy.harvest
        self.naive = scenario.sim.protocol == "naive_aloha"

        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self.now = 0.0
        self.metrics: list[MetricsRecord] = []
        self.audits: list[SafetyAudit] = []
        self.attempt_log: list[tuple[TxAttempt, bool]] = []
        self.reports: list[NodeBatteryReport] = []
        self._active: dict[str, list[_ActiveAttempt]] = {}
        self._packet_count = 0

        n = scenario.sim.node_count
        ss = np.random.SeedSequence([self.seed])
        children = ss.spawn(2 * n + 1)
        offset_rng = np.random.default_rng(children[-1])

        override = None
        if scenario.sim.schedule_override_path:
            override = load_schedule_override(scenario.sim.schedule_override_path)

        self.nodes: list[_Node] = []
        for u in range(n):
            orbit = scenario.node_orbit(u)
            if schedules is not None and u in schedules:
                schedule = schedules[u]
            elif override is not None:
                schedule = override.get(u, Schedule())
            elif scenario.stations:
                schedule = build_schedule(
                    orbit, list(scenario.stations), horizon=self.t_end,
                    step=scenario.sim.schedule_step_s,
                )
            else:
                schedule = Schedule()

            slot_offset = float(offset_rng.uniform(0.0, self.slot_s))
            n_slots = max(int(math.floor((self.t_end - slot_offset) / self.slot_s)), 0)
            account_end = slot_offset + n_slots * self.slot_s
            traffic_rng = np.random.default_rng(children[2 * u])
            phi0 = scenario.steady_state_phi_j(orbit)
            node = _Node(
                node_id=u,
                slot_s=self.slot_s,
                orbit=orbit,
                schedule=schedule,
                energy=NodeEnergyState(
                    phi_j=phi0,
                    phi_max_j=scenario.phi_max_j(),
                    phi_min_j=scenario.energy.psi_min_j,
                    e_critical_j=scenario.energy.e_critical_j,
                    ewma_estimate_j=scenario.energy.ewma_initial_j,
                ),
                battery=BatteryState(
                    soc=phi0 / scenario.phi_max_j(),
                    capacity_rated_ah=scenario.battery.capacity_rated_ah,
                    voltage_nominal_v=scenario.battery.voltage_nominal_v,
                ),
                slot_offset=slot_offset,
                account_end=account_end,
                backoff_rng=np.random.default_rng(children[2 * u + 1]),
                arrivals=self._generate_arrivals(traffic_rng, account_end),
                window_starts=[w.start for w in schedule.windows],
            )
            self.nodes.append(node)

            if n_slots >= 1:
                self._push(node.slot_time(1), EventKind.SLOT_TICK, (u, 1))
            if scenario.sim.report_interval_s < self.t_end:
                self._push(scenario.sim.report_interval_s, EventKind.REPORT_DUE, (u,))
            self._schedule_next_phase_change(node, 0.0)

    # ── plumbing ─────────────────────────────────────────────────────────

    def _push(self, time: float, kind: EventKind, payload: tuple):
        if time < self.now - 1e-9:
            raise ContractError(f"event {kind} scheduled at {time} before now {self.now}")
        heapq.heappush(self._heap, SimEvent(time, next(self._seq), kind, payload))

    def _generate_arrivals(self, rng: np.random.Generator, horizon: float) -> list[float]:
        model = self.sc.sim.traffic_model
        rate = self.sc.sim.traffic_rate_per_s
        if model == "none" or rate <= 0.0 or horizon <= 0.0:
            return []
        out: list[float] = []
        if model == "poisson":
            t = 0.0
            while True:
                t += rng.exponential(1.0 / rate)
                if t >= horizon:
                    break
                out.append(t)
        else:  # periodic
            step = 1.0 / rate
            t = float(rng.uniform(0.0, step))
            while t < horizon:
                out.append(t)
                t += step
        return out

    def _schedule_next_phase_change(self, node: _Node, after: float):
        """Queue the next phase boundary of this node's orbit profile."""
        period = node.orbit.period_s
        off = node.orbit.phase_time_offset_s
        t_orbit = (after + off) % period
        if t_orbit < node.orbit.sun_duration_s:
            next_t = after + (node.orbit.sun_duration_s - t_orbit)
            phase = ECLIPSE
        else:
            next_t = after + (period - t_orbit)
            phase = SUN
        if next_t <= self.t_end:
            self._push(next_t, EventKind.PHASE_CHANGE, (node.node_id, phase))

    # ── main loop ────────────────────────────────────────────────────────

    def run(self) -> RunResult:
        handlers = {
            EventKind.SLOT_TICK: self._on_slot_tick,
            EventKind.PHASE_CHANGE: self._on_phase_change,
            EventKind.WINDOW_OPEN: self._on_window_open,
            EventKind.WINDOW_CLOSE: lambda ev: None,
            EventKind.TX_ATTEMPT_START: self._on_attempt_start,
            EventKind.TX_ATTEMPT_END: self._on_attempt_end,
            EventKind.REPORT_DUE: self._on_report_due,
            EventKind.BROWNOUT_RECOVERY: lambda ev: None,
        }
        while self._heap:
            ev = heapq.heappop(self._heap)
            if ev.time > self.t_end + 1e-9:
                continue
            self.now = ev.time
            handlers[ev.kind](ev)
        self.now = self.t_end
        self._finalize()
        return RunResult(
            scenario=self.sc,
            seed=self.seed,
            metrics=self.metrics,
            summary=self._summary(),
            audits=self.audits,
            attempt_log=self.attempt_log,
            reports=self.reports,
            nodes=self.nodes,
        )

    # ── traffic and MAC decisions ────────────────────────────────────────

    def _drain_arrivals(self, node: _Node, until: float):
        while node.arrival_ptr < len(node.arrivals) and node.arrivals[node.arrival_ptr] <= until:
            created = node.arrivals[node.arrival_ptr]
            node.arrival_ptr += 1
            node.generated += 1
            self._packet_count += 1
            node.queue.append(
                _Packet(node_id=node.node_id, packet_id=self._packet_count, created=created)
            )

    def _decide_queue(self, node: _Node, now: float):
        pending = node.queue
        node.queue = []
        for packet in pending:
            if self.naive:
                self._decide_naive(node, packet, now)
            else:
                self._decide_aware(node, packet, max(now, node.busy_until))

    def _candidates(self, node: _Node, now: float, created: float) -> list[ForecastWindow]:
        deadline = created + self.sc.mac.deadline_s
        return [
            w for w in node.schedule.candidates(now, deadline)
            if w.end <= node.account_end
        ]

    def _decide_aware(self, node: _Node, packet: _Packet, now: float):
        result: SelectionResult = select_forecast_window(
            self._candidates(node, now, packet.created),
            node.energy,
            self.harvest,
            self.profile,
            self.sc.mac,
            self.sc.battery.params,
            self.sc.battery.base_stress,
            self.sc.battery.capacity_rated_j,
            now=now,
            slot_s=self.slot_s,
            min_attempt_s=self.toa,
        )
        decision = result.decision
        self._audit(node, now, decision, result)
        if not decision.is_transmit:
            self._drop(node, packet, _DROP_COUNTER[decision.reason], decision.reason.value)
            return
        window = decision.window
        packet.status = "waiting"
        packet.window = window
        packet.tx_phase = window.phase
        packet.reserved_j = node.energy.ewma_estimate_j
        node.energy.reserved_j += packet.reserved_j
        self._push(max(window.start, now), EventKind.WINDOW_OPEN, (node.node_id, packet))
        self._push(min(window.end, self.t_end), EventKind.WINDOW_CLOSE,
                   (node.node_id, window.window_id))

    def _audit(self, node: _Node, now: float, decision: TxDecision, result: SelectionResult):
        if decision.is_transmit:
            ev = next(e for e in result.evaluations if e.window is decision.window)
            self.audits.append(SafetyAudit(
                node_id=node.node_id, time=now, transmit=True,
                phase=ev.window.phase, psi_j=ev.psi_j,
                psi_min_j=node.energy.phi_min_j, estimate_j=ev.estimate_j,
                threshold_j=ev.threshold_j, reason=None,
            ))
        else:
            self.audits.append(SafetyAudit(
                node_id=node.node_id, time=now, transmit=False,
                phase=None, psi_j=node.energy.phi_j - node.energy.reserved_j,
                psi_min_j=node.energy.phi_min_j, estimate_j=None,
                threshold_j=None, reason=decision.reason,
            ))

    def _decide_naive(self, node: _Node, packet: _Packet, now: float):
        """Immediate-ALOHA baseline: transmit as generated, no energy checks."""
        start = max(now, node.busy_until)
        end = min(start + MAX_NAIVE_SPAN_S, node.account_end)
        if end - start < self.toa:
            self._drop(node, packet, "dropped_no_window", DropReason.NO_WINDOW.value)
            return
        pseudo = ForecastWindow(
            window_id=f"naive:{packet.packet_id}",
            start=start, end=end,
            phase=phase_at(node.orbit, start),
            target="",
        )
        attempts = run_transmission_sequence(
            TxDecision.transmit(pseudo), self.sc.radio, self.sc.mac,
            node.backoff_rng, not_before=start,
        )
        if not attempts:
            self._drop(node, packet, "dropped_no_window", DropReason.NO_WINDOW.value)
            return
        packet.status = "in_flight"
        packet.window = pseudo
        packet.tx_phase = phase_at(node.orbit, attempts[0])
        node.in_flight = packet
        self._mark_tx_slot(node, packet, attempts[0])
        node.busy_until = attempts[-1] + self.toa
        total = len(attempts)
        for k, t_start in enumerate(attempts):
            receiver = self._visible_target(node, t_start)
            if receiver is not None:
                packet.had_receiver = True
            self._push(t_start, EventKind.TX_ATTEMPT_START,
                       (node.node_id, packet, k, total, receiver))
            self._push(t_start + self.toa, EventKind.TX_ATTEMPT_END,
                       (node.node_id, packet, k, total, receiver))

    def _visible_target(self, node: _Node, t: float) -> str | None:
        """Earliest-starting window covering the whole attempt, if any."""
        hi = bisect.bisect_right(node.window_starts, t)
        best = None
        for i in range(hi - 1, -1, -1):
            w = node.schedule.windows[i]
            if w.start < t - 1800.0 - self.slot_s:
                break
            if w.start <= t and t + self.toa <= w.end:
                best = w.target if best is None else best
        return best

    def _mark_tx_slot(self, node: _Node, packet: _Packet, t: float):
        idx = node.slot_index(t)
        packet.tx_slot_idx = idx
        node.tx_slot_info[idx] = packet.tx_phase

    # ── event handlers ───────────────────────────────────────────────────

    def _on_window_open(self, ev: SimEvent):
        node_id, packet = ev.payload
        node = self.nodes[node_id]
        if packet.status != "waiting" or packet.canceled:
            return
        window = packet.window
        start = max(window.start, ev.time, node.busy_until)

        # The hard reserve is re-checked when the window actually opens;
        # sun-window estimates were projections and stand as decided.
        psi = node.energy.phi_j - node.energy.reserved_j + packet.reserved_j
        ok = psi > node.energy.phi_min_j if window.phase == ECLIPSE else True

        attempts: list[float] = []
        if ok and start + self.toa <= window.end:
            attempts = run_transmission_sequence(
                TxDecision.transmit(window), self.sc.radio, self.sc.mac,
                node.backoff_rng, not_before=start,
            )
        if not attempts:
            self._release(node, packet)
            packet.status = "queued"
            self._decide_aware(node, packet, max(ev.time, node.busy_until))
            return

        packet.status = "in_flight"
        node.in_flight = packet
        self._mark_tx_slot(node, packet, attempts[0])
        node.busy_until = attempts[-1] + self.toa
        total = len(attempts)
        for k, t_start in enumerate(attempts):
            packet.had_receiver = True
            self._push(t_start, EventKind.TX_ATTEMPT_START,
                       (node.node_id, packet, k, total, window.target))
            self._push(t_start + self.toa, EventKind.TX_ATTEMPT_END,
                       (node.node_id, packet, k, total, window.target))

    def _on_attempt_start(self, ev: SimEvent):
        node_id, packet, k, total, receiver = ev.payload
        if packet.status != "in_flight" or packet.canceled:
            return
        packet.attempts_made += 1
        if receiver is None:
            packet.current_attempt = None
            return
        attempt = _ActiveAttempt(
            end=ev.time + self.toa, sf=self.sc.radio.spreading_factor, channel=0
        )
        active = self._active.setdefault(receiver, [])
        active[:] = [a for a in active if a.end > ev.time]
        for other in active:
            if other.sf == attempt.sf and other.channel == attempt.channel:
                other.collided = True
                attempt.collided = True
        active.append(attempt)
        packet.current_attempt = attempt

    def _on_attempt_end(self, ev: SimEvent):
        node_id, packet, k, total, receiver = ev.payload
        node = self.nodes[node_id]
        if packet.status != "in_flight" or packet.canceled:
            return
        attempt = packet.current_attempt
        packet.current_attempt = None
        collided = attempt.collided if attempt is not None else True
        if receiver is not None:
            self.attempt_log.append((
                TxAttempt(start=ev.time - self.toa, airtime=self.toa, channel=0,
                          sf=self.sc.radio.spreading_factor, receiver=receiver),
                not collided,
            ))
        if receiver is not None and not collided:
            self._release(node, packet)
            packet.status = "delivered"
            packet.canceled = True
            node.delivered += 1
            node.period_txs += 1
            self._tx_complete(node)
        elif k == total - 1:
            if packet.had_receiver:
                counter, detail = "dropped_collision_exhausted", "collision_exhausted"
            else:
                counter, detail = "dropped_no_window", DropReason.NO_WINDOW.value
            node.period_txs += 1
            self._drop(node, packet, counter, detail)
            self._tx_complete(node)

    def _tx_complete(self, node: _Node):
        node.in_flight = None
        node.energy.ewma_estimate_j = ewma_update(
            self.sc.mac.beta, self.profile.e_cons_tx_j, node.energy.ewma_estimate_j
        )

    def _release(self, node: _Node, packet: _Packet):
        if packet.reserved_j:
            node.energy.reserved_j = max(0.0, node.energy.reserved_j - packet.reserved_j)
            packet.reserved_j = 0.0

    def _drop(self, node: _Node, packet: _Packet, counter: str, detail: str):
        self._release(node, packet)
        packet.status = "dropped"
        packet.drop_reason = detail
        packet.canceled = True
        setattr(node, counter, getattr(node, counter) + 1)

    def _on_slot_tick(self, ev: SimEvent):
        node_id, k = ev.payload
        node = self.nodes[node_id]
        t_end = node.slot_time(k)
        t_start = node.slot_time(k - 1)
        idx = k - 1

        sun_secs = sun_seconds(node.orbit, t_start, t_end)
        sun_frac = min(max(sun_secs / self.slot_s, 0.0), 1.0)
        y = 1 if sun_secs > 0.0 else 0
        e_g = self.harvest.slot_harvest(sun_frac) if y else 0.0
        phase_flag = SUN if y else ECLIPSE

        tx_phase = node.tx_slot_info.pop(idx, None)
        x = 1 if tx_phase is not None else 0
        if idx in node.forced_sleep:
            node.forced_sleep.discard(idx)
            x = 0
            tx_phase = None

        step = energy_step(node.energy, x, y, e_g, self.profile, phase_flag)
        node.e_g_history.append(e_g)
        cons = x * self.profile.e_cons_tx_j + (1 - x) * self.profile.e_sleep_j
        node.energy_consumed_j += cons
        node.energy_harvested_j += y * e_g
        node.period_energy_j += cons
        node.period_slots += 1

        brownout_now = step.brownout
        if step.clamped_high or step.brownout:
            node.clamp_events.append((t_end, step.clamp_adjustment_j))
        if brownout_now:
            node.brownout_count += 1
            node.forced_sleep.add(idx + 1)
            if node.in_flight is not None:
                victim = node.in_flight
                if victim.tx_slot_idx is not None and victim.tx_slot_idx > idx:
                    node.tx_slot_info.pop(victim.tx_slot_idx, None)
                self._drop(node, victim, "dropped_energy", "brownout")
                node.in_flight = None
                node.busy_until = t_end
            self._push(min(t_end + self.slot_s, self.t_end),
                       EventKind.BROWNOUT_RECOVERY, (node_id,))

        # orbit ledger: the battery discharges wherever consumption beats harvest
        eclipse_secs = self.slot_s - sun_secs
        bus_rate = self.profile.e_sleep_j / self.slot_s
        harvest_rate = e_g / sun_secs if sun_secs > 0.0 else 0.0
        discharge = bus_rate * eclipse_secs
        if sun_secs > 0.0 and bus_rate > harvest_rate:
            discharge += (bus_rate - harvest_rate) * sun_secs
        if x and tx_phase == ECLIPSE:
            discharge += self.profile.e_cons_tx_j - self.profile.e_sleep_j
        led = node.ledger
        led.duration_s += self.slot_s
        led.discharge_j += discharge
        led.harvest_j += y * e_g
        led.consumption_j += cons
        led.soc_time_integral += node.energy.soc * self.slot_s

        self._drain_arrivals(node, t_end)
        if not brownout_now:
            self._decide_queue(node, t_end)

        if k + 1 <= (node.account_end - node.slot_offset) / self.slot_s + 1e-9:
            self._push(node.slot_time(k + 1), EventKind.SLOT_TICK, (node_id, k + 1))

    def _on_phase_change(self, ev: SimEvent):
        node_id, new_phase = ev.payload
        node = self.nodes[node_id]
        if new_phase == SUN:
            self._flush_orbit(node)
        self._schedule_next_phase_change(node, ev.time + 1e-9)

    def _flush_orbit(self, node: _Node):
        if node.ledger.duration_s <= 0.0:
            return
        dod = step_battery_per_orbit(
            node.battery, self.sc.battery.params, self.sc.battery.thermal,
            node.ledger,
            dod_reference=self.sc.battery.dod_reference,
            c_rate_reference=self.sc.battery.c_rate_reference,
            soc_reference=self.sc.battery.soc_reference,
        )
        if node.ledger.discharge_j > 0.0:
            node.period_dods.append(dod)
        node.ledger = OrbitLedger()
        new_phi_max = self.sc.phi_max_j(node.battery.fade_fraction)
        if node.energy.phi_j > new_phi_max:
            node.clamp_events.append((self.now, new_phi_max - node.energy.phi_j))
            node.energy.phi_j = new_phi_max
        node.energy.phi_max_j = new_phi_max
        node.battery.soc = node.energy.soc

    def _on_report_due(self, ev: SimEvent):
        (node_id,) = ev.payload
        node = self.nodes[node_id]
        # a phase boundary landing exactly on the report boundary settles
        # its orbit first, so the observation rides this period's report
        off = node.orbit.phase_time_offset_s
        if node.ledger.duration_s > 0.0 and (ev.time + off) % node.orbit.period_s < 1e-6:
            self._flush_orbit(node)
        self._emit_report(node, ev.time)
        nxt = ev.time + self.sc.sim.report_interval_s
        if nxt < self.t_end:
            self._push(nxt, EventKind.REPORT_DUE, (node_id,))

    def _emit_report(self, node: _Node, t: float):
        if t <= node.period_start:
            return
        self.reports.append(report_battery_summary(
            node_id=node.node_id,
            period_start=node.period_start,
            period_end=t,
            n_slots=node.period_slots,
            n_transmissions=node.period_txs,
            energy_consumed_j=node.period_energy_j,
            dod_observations=list(node.period_dods),
            thermal=self.sc.battery.thermal,
        ))
        self.metrics.append(MetricsRecord(
            time_s=t,
            node_id=node.node_id,
            soc=node.energy.soc,
            fade_fraction=node.battery.fade_fraction,
            d_linear=node.battery.d_linear,
            packets_delivered=node.delivered,
            packets_dropped_energy=node.dropped_energy,
            packets_dropped_collision_exhausted=node.dropped_collision_exhausted,
            packets_dropped_no_window=node.dropped_no_window,
            energy_harvested_j=node.energy_harvested_j,
            energy_consumed_j=node.energy_consumed_j,
        ))
        node.period_start = t
        node.period_slots = 0
        node.period_txs = 0
        node.period_energy_j = 0.0
        node.period_dods = []

    def _finalize(self):
        for node in self.nodes:
            self._flush_orbit(node)
            self._drain_arrivals(node, self.t_end)
            for packet in node.queue:
                if packet.status == "queued":
                    self._drop(node, packet, "dropped_no_window", DropReason.NO_WINDOW.value)
            node.queue = []
            if node.in_flight is not None and node.in_flight.status == "in_flight":
                self._drop(node, node.in_flight, "dropped_collision_exhausted", "run_end")
                node.in_flight = None
            self._emit_report(node, self.t_end)

    def _summary(self) -> dict:
        per_node = {}
        totals = {
            "generated": 0, "delivered": 0, "dropped_energy": 0,
            "dropped_collision_exhausted": 0, "dropped_no_window": 0,
        }
        for node in self.nodes:
            totals["generated"] += node.generated
            totals["delivered"] += node.delivered
            totals["dropped_energy"] += node.dropped_energy
            totals["dropped_collision_exhausted"] += node.dropped_collision_exhausted
            totals["dropped_no_window"] += node.dropped_no_window
            per_node[str(node.node_id)] = {
                "soc": node.energy.soc,
                "fade_fraction": node.battery.fade_fraction,
                "d_linear": node.battery.d_linear,
                "dc_cal": node.battery.dc_cal_total,
                "dc_cycle": node.battery.dc_cycle_total,
                "cycles_completed": node.battery.cycles_completed,
                "calendar_days": node.battery.calendar_days,
                "delivered": node.delivered,
                "dropped_energy": node.dropped_energy,
                "dropped_collision_exhausted": node.dropped_collision_exhausted,
                "dropped_no_window": node.dropped_no_window,
                "energy_harvested_j": node.energy_harvested_j,
                "energy_consumed_j": node.energy_consumed_j,
                "brownouts": node.brownout_count,
                "clamp_events": len(node.clamp_events),
            }
        delivered = totals["delivered"]
        dropped = (totals["dropped_energy"] + totals["dropped_collision_exhausted"]
                   + totals["dropped_no_window"])
        gateway = gateway_compute_fleet_degradation(
            self.reports, self.sc.battery.params,
            soc_reference=self.sc.battery.soc_reference,
            c_rate_reference=self.sc.battery.c_rate_reference,
            dod_reference=self.sc.battery.dod_reference,
        )
        return {
            "seed": self.seed,
            "protocol": self.sc.sim.protocol,
            "duration_s": self.t_end,
            "node_count": self.sc.sim.node_count,
            "packets": dict(totals),
            "packets_terminal": delivered + dropped,
            "pdr": delivered / totals["generated"] if totals["generated"] else None,
            "per_node": per_node,
            "gateway_assessment": {
                str(a.node_id): {
                    "dc_cal": a.dc_cal,
                    "dc_cycle": a.dc_cycle,
                    "d_linear": a.d_linear,
                    "fade_fraction": a.fade_fraction,
                }
                for a in gateway.values()
            },
        }


def run(
    scenario: ScenarioConfig,
    seed: int | None = None,
    schedules: dict[int, Schedule] | None = None,
) -> RunResult:
    """Run one scenario to completion; identical inputs give identical outputs."""
    return Simulator(scenario, seed=seed, schedules=schedules).run()


def write_metrics_csv(metrics: list[MetricsRecord], path: str | Path):
    lines = [",".join(METRICS_COLUMNS)]
    for m in metrics:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in m.as_row()))
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary_json(summary: dict, path: str | Path):
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
