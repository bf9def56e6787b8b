"""Slotted TDD MAC engine: contention, allocation, uplink SIC, delay adaptation.

Each slot runs beacon (CSI refresh at coherence boundaries), contention over
the reserved blocks, base-station allocation of the received requests, the
uplink phase with per-resource-block SIC, the downlink phase (cluster-info
updates plus a downlink SIC check), and finally one step of every device's
traffic chains.  Everything is driven by generators spawned from a single
seed, so identical (config, seed) reproduces runs bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterator

import numpy as np
from numpy.random import Generator, default_rng

from . import _kernels
from .allocation import (AllocationTable, PowerLadder, allocate_fast, allocate_massive,
                         allocate_qos, cluster_info, remove_mtd)
from .geometry import (ChannelConstants, link_gain, path_gain, sample_fading,
                       sample_ppp, uniform_disc)
from .metrics import Metrics
from .sic import ClusterMember, SicConfig, collision_set, sic_feasible
from .traffic import (ALARM, GENERATING, IDLE, MODE_NAMES, REGULAR, GenChainParams,
                      ModeChainParams, TrafficEstimate, TrafficParams,
                      activity_probability, estimate_params, simulate_generation_trace,
                      simulate_mode_trace)

SCHEMES = ("fast", "massive", "qos")

PHASES = ("beacon", "uplink", "downlink")

EVENT_KINDS = frozenset({
    "contention_tx", "contention_collision", "allocated", "no_alloc",
    "ul_success", "ul_collision", "dl_success", "dl_failure",
    "mode_switch", "delay_change", "removed",
})


class ConfigError(ValueError):
    """Invalid simulation configuration; ``errors`` lists every violation."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class InvariantViolation(RuntimeError):
    """A table invariant failed during a checked run."""


@dataclass(frozen=True)
class SlotSchedule:
    """Position of a slot inside the TDD frame structure."""

    slot_index: int
    frame_length: int
    slot_duration: float = 1.0
    phases: tuple[str, ...] = PHASES

    @property
    def in_frame(self) -> int:
        return self.slot_index % self.frame_length


@dataclass(frozen=True)
class BackoffState:
    """Binary exponential backoff bookkeeping for one contender."""

    backoff_exponent: int = 0
    wait_remaining: int = 0
    attempts: int = 0


def backoff_wait(exponent: int, rng: Generator) -> int:
    """round(uniform(0, 2^exponent)) with half-up rounding; support {0..2^exponent}."""
    return int(math.floor(rng.uniform(0.0, 2.0 ** exponent) + 0.5))


def contention_attempt(backoff: BackoffState, w_contention: int,
                       rng: Generator) -> tuple[int, BackoffState]:
    """Pick a contention block uniformly; collision resolution happens globally."""
    rb = int(rng.integers(w_contention))
    return rb, replace(backoff, attempts=backoff.attempts + 1)


def register_collision(backoff: BackoffState, backoff_cap: int,
                       rng: Generator) -> BackoffState:
    """Increment the (capped) exponent and draw the wait before the next attempt."""
    exponent = min(backoff.backoff_exponent + 1, backoff_cap)
    return BackoffState(exponent, backoff_wait(exponent, rng), backoff.attempts)


def register_success(backoff: BackoffState) -> BackoffState:
    return BackoffState(0, 0, backoff.attempts)


@dataclass(frozen=True)
class DelayAdaptState:
    """Frame-offset adaptation state of one cluster grant.

    ``frame_offset`` None means the member transmits in every backlogged slot
    (SIC-feasible admissions); relaxation admissions carry an in-frame offset.
    """

    frame_offset: int | None = None
    success_count: int = 0

    @property
    def change_probability(self) -> float:
        return 1.0 / (1.0 + self.success_count)


def adapt_delay(state: DelayAdaptState, collided: bool, frame_length: int,
                rng: Generator) -> DelayAdaptState:
    """Success keeps the offset and bumps the count; collision redraws the
    offset uniformly with probability 1/(1+success_count)."""
    if not collided:
        return replace(state, success_count=state.success_count + 1)
    if rng.random() < state.change_probability:
        return replace(state, frame_offset=int(rng.integers(frame_length)))
    return state


class EventLog:
    """Append-only event records (slot, mtd, kind, aux), slots non-decreasing."""

    def __init__(self) -> None:
        self.records: list[tuple[int, int, str, dict | None]] = []
        self._last_slot = -1

    def append(self, slot: int, mtd: int, kind: str, **aux) -> None:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        if slot < self._last_slot:
            raise ValueError("event slots must be non-decreasing")
        self._last_slot = slot
        self.records.append((slot, mtd, kind, aux or None))

    def __iter__(self) -> Iterator[tuple[int, int, str, dict | None]]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return self.records == other.records

    def to_jsonl(self, fp: IO[str]) -> None:
        """One JSON object per record; keys slot, mtd, kind then sorted aux keys."""
        for slot, mtd, kind, aux in self.records:
            parts = [f'"slot":{slot}', f'"mtd":{mtd}', f'"kind":"{kind}"']
            if aux:
                for key in sorted(aux):
                    value = aux[key]
                    if isinstance(value, str):
                        parts.append(f'"{key}":"{value}"')
                    elif isinstance(value, bool):
                        parts.append(f'"{key}":{"true" if value else "false"}')
                    else:
                        parts.append(f'"{key}":{value}')
            fp.write("{" + ",".join(parts) + "}\n")


_TRAFFIC_FIELDS = ("alpha", "beta", "alpha_alarm", "beta_alarm",
                   "alpha_regular", "beta_regular")


@dataclass(frozen=True)
class TrafficSpec:
    """Population traffic parameters: scalars or (low, high) uniform ranges."""

    alpha: float | tuple[float, float] = 0.05
    beta: float | tuple[float, float] = 0.85
    alpha_alarm: float | tuple[float, float] = 0.4
    beta_alarm: float | tuple[float, float] = 0.4
    alpha_regular: float | tuple[float, float] = 0.1
    beta_regular: float | tuple[float, float] = 0.1

    def validate(self) -> list[str]:
        errors = []
        for name in _TRAFFIC_FIELDS:
            value = getattr(self, name)
            bounds = value if isinstance(value, tuple) else (value, value)
            if len(bounds) != 2 or bounds[0] > bounds[1]:
                errors.append(f"traffic.{name}: range must be (low, high) with low <= high")
                continue
            if not (0.0 <= bounds[0] and bounds[1] <= 1.0):
                errors.append(f"traffic.{name}: probabilities must lie in [0, 1]")
        return errors

    def draw(self, rng: Generator, n: int) -> dict[str, np.ndarray]:
        """Per-device parameter vectors, drawn field by field in declaration order."""
        out = {}
        for name in _TRAFFIC_FIELDS:
            value = getattr(self, name)
            if isinstance(value, tuple):
                out[name] = rng.uniform(value[0], value[1], n)
            else:
                out[name] = np.full(n, float(value))
        return out


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulation run."""

    scheme: str = "fast"
    seed: int = 0
    horizon: int = 2000
    # geometry
    density: float = 1e-4
    radius: float = 500.0
    mtd_count: int | None = None  # fixed deployment size, overrides density
    # channel
    wavelength: float = 0.125
    antenna_gain_product: float = 1.0
    pathloss_coefficient: float = 4.0 * math.pi
    channel_composition: str = "multiplicative"
    noise_power: float = 1e-15
    fading_variance: float = 1.0
    coherence_slots: int | None = None  # None = block fading for the whole run
    subcarriers: int = 1
    # resources
    w_total: int = 12
    w_contention: int = 2
    c_max: int = 4
    power_min_dbm: float = 10.0
    power_max_dbm: float = 23.0
    power_levels: int = 8
    sinr_threshold: float = 1.0
    # traffic
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    queue_capacity: int = 100
    activity_model: str = "literal"
    training_slots: int = 500
    # mac dynamics
    frame_length: int = 5
    backoff_cap: int = 10
    hold_off_slots: int = 100
    activity_threshold: float = 0.95
    requeue_failures: int | None = 20
    slot_duration: float = 1.0

    def validate(self) -> list[str]:
        errors = []
        if self.scheme not in SCHEMES:
            errors.append(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.horizon < 0:
            errors.append("horizon must be non-negative")
        if self.density < 0:
            errors.append("density must be non-negative")
        if self.radius <= 0:
            errors.append("radius must be positive")
        if self.mtd_count is not None and self.mtd_count < 0:
            errors.append("mtd_count must be non-negative")
        for name in ("wavelength", "antenna_gain_product", "pathloss_coefficient",
                     "noise_power", "slot_duration"):
            if getattr(self, name) <= 0:
                errors.append(f"{name} must be positive")
        if self.fading_variance < 0:
            errors.append("fading_variance must be non-negative")
        if self.channel_composition not in ("multiplicative", "division"):
            errors.append("channel_composition must be multiplicative or division")
        if self.coherence_slots is not None and self.coherence_slots < 1:
            errors.append("coherence_slots must be at least 1 (or null for block fading)")
        if self.subcarriers != 1:
            errors.append("subcarriers: only single-carrier pools are modeled; set 1")
        if not 1 <= self.w_contention < self.w_total:
            errors.append("need 1 <= w_contention < w_total "
                          "(contention blocks must leave transmission blocks)")
        if self.c_max < 1:
            errors.append("c_max must be at least 1")
        if self.power_levels < 1:
            errors.append("power_levels must be at least 1")
        if self.power_min_dbm > self.power_max_dbm:
            errors.append("power_min_dbm must not exceed power_max_dbm")
        if self.sinr_threshold <= 0:
            errors.append("sinr_threshold must be positive")
        if self.queue_capacity < 1:
            errors.append("queue_capacity must be at least 1")
        if self.activity_model not in ("literal", "stationary"):
            errors.append("activity_model must be literal or stationary")
        if self.scheme != "fast" and self.training_slots < 2:
            errors.append("training_slots must be at least 2 for massive/qos schemes")
        if self.frame_length < 1:
            errors.append("frame_length must be at least 1")
        if self.backoff_cap < 0:
            errors.append("backoff_cap must be non-negative")
        if self.hold_off_slots < 1:
            errors.append("hold_off_slots must be at least 1")
        if self.activity_threshold <= 0:
            errors.append("activity_threshold must be positive")
        if self.requeue_failures is not None and self.requeue_failures < 1:
            errors.append("requeue_failures must be at least 1 (or null to disable)")
        errors.extend(self.traffic.validate())
        return errors

    def channel_constants(self) -> ChannelConstants:
        return ChannelConstants(self.wavelength, self.antenna_gain_product,
                                self.pathloss_coefficient, self.noise_power,
                                self.channel_composition)

    def sic_config(self) -> SicConfig:
        return SicConfig(self.sinr_threshold, self.noise_power, self.c_max)

    def ladder(self) -> PowerLadder:
        return PowerLadder.from_dbm_range(self.power_min_dbm, self.power_max_dbm,
                                          self.power_levels)


def training_phase(params: TrafficParams, training_slots: int, rng: Generator,
                   start_mode: int = REGULAR, start_gen: int = IDLE) -> TrafficEstimate:
    """Self-observe the traffic chains for a training window and estimate them."""
    if training_slots < 2:
        raise ConfigError(["training_slots must be at least 2"])
    modes = simulate_mode_trace(params.mode, training_slots, rng, start=start_mode)
    gens = simulate_generation_trace(modes, params, rng, start=start_gen)
    return estimate_params(modes, np.stack([modes, gens], axis=1))


@dataclass
class UplinkOutcome:
    mtd_id: int
    rb: int
    mode: int
    success: bool
    offset_changed: bool
    new_offset: int | None


def uplink_phase(table: AllocationTable, slot: int, frame_length: int, cfg: SicConfig,
                 queues: dict[int, int], modes: dict[int, int],
                 adapters: dict[tuple[int, int | None], DelayAdaptState],
                 rngs: dict[int, Generator],
                 mode_tagged: bool = False) -> list[UplinkOutcome]:
    """Run one uplink slot over every resource block.

    The members transmitting on a block this slot (backlogged, offset matching,
    and — for mode-tagged tables — holding the grant of their current mode)
    form the instantaneous cluster; its SIC outcome decides per-member success.
    Successes dequeue one packet, every transmitter's delay-adaptation state is
    updated, and redrawn offsets are written back to the table.
    """
    outcomes: list[UplinkOutcome] = []
    for rb, row in enumerate(table.rows):
        tx = []
        for m in row:
            if mode_tagged and m.mode != modes[m.mtd_id]:
                continue
            if queues.get(m.mtd_id, 0) <= 0:
                continue
            if m.frame_offset is not None and slot % frame_length != m.frame_offset:
                continue
            tx.append(m)
        if not tx:
            continue
        result = sic_feasible(tx, cfg)
        for m in tx:
            ok = result.per_member[m.mtd_id]
            if ok:
                queues[m.mtd_id] -= 1
            key = (m.mtd_id, m.mode if mode_tagged else None)
            state = adapters[key]
            new_state = adapt_delay(state, collided=not ok,
                                    frame_length=frame_length, rng=rngs[m.mtd_id])
            changed = new_state.frame_offset != state.frame_offset
            if changed:
                m.frame_offset = new_state.frame_offset
            adapters[key] = new_state
            outcomes.append(UplinkOutcome(m.mtd_id, rb, modes[m.mtd_id], ok,
                                          changed, new_state.frame_offset))
    return outcomes


def check_table_invariants(table: AllocationTable, scheme: str, cfg: SicConfig,
                           activity_threshold: float) -> None:
    """Raise :class:`InvariantViolation` if any cluster breaks its scheme's invariant."""
    for rb, row in enumerate(table.rows):
        if not row:
            continue
        feasible = sic_feasible(row, cfg).feasible
        if scheme == "fast":
            if not feasible:
                raise InvariantViolation(f"cluster {rb} not SIC-feasible under fast scheme")
        elif not feasible:
            colliding = collision_set(row, cfg)
            load = sum(m.pi_act for m in row if m.mtd_id in colliding)
            if load >= activity_threshold:
                raise InvariantViolation(
                    f"cluster {rb}: colliding activity load {load:.4f} >= "
                    f"{activity_threshold}")
        if scheme == "qos":
            alarm_rp = [m.received_power for m in row if m.mode == ALARM]
            regular_rp = [m.received_power for m in row if m.mode == REGULAR]
            if alarm_rp and regular_rp and min(alarm_rp) < max(regular_rp):
                raise InvariantViolation(f"cluster {rb}: alarm priority ordering broken")


class _Agent:
    """Per-device runtime state owned by the engine."""

    __slots__ = ("mtd_id", "distance", "rng", "amplitude", "params", "training_end",
                 "next_attempt", "backoff", "cycle_start", "allocated", "estimate",
                 "pi_act_est", "grant_tags", "consecutive_failures")

    def __init__(self, mtd_id: int, distance: float, rng: Generator,
                 amplitude: float, params: TrafficParams, training_end: int):
        self.mtd_id = mtd_id
        self.distance = distance
        self.rng = rng
        self.amplitude = amplitude
        self.params = params
        self.training_end = training_end
        self.next_attempt = training_end
        self.backoff = BackoffState()
        self.cycle_start: int | None = None
        self.allocated = False
        self.estimate: TrafficEstimate | None = None
        self.pi_act_est: float | None = None
        self.grant_tags: list[int | None] = []
        self.consecutive_failures = 0


class MacEngine:
    """One simulation run; create, then call :meth:`run` exactly once."""

    def __init__(self, config: SimConfig):
        errors = config.validate()
        if errors:
            raise ConfigError(errors)
        self.config = config
        self.constants = config.channel_constants()
        self.sic_cfg = config.sic_config()
        self.ladder = config.ladder()
        self.table = AllocationTable(config.w_total, config.w_contention, config.c_max)
        self.log = EventLog()

        seq = np.random.SeedSequence(config.seed)
        geom_seq, traffic_seq = seq.spawn(2)
        self.geom_rng = default_rng(geom_seq)
        self.traffic_rng = default_rng(traffic_seq)

        if config.mtd_count is not None:
            positions = uniform_disc(config.mtd_count, config.radius, self.geom_rng)
        else:
            positions = sample_ppp(config.density, config.radius, self.geom_rng)
        n = len(positions)
        self.n_mtds = n

        agent_seqs = seq.spawn(n)
        draws = config.traffic.draw(self.traffic_rng, n)
        training_end = 0 if config.scheme == "fast" else config.training_slots
        self.agents: list[_Agent] = []
        for i, pos in enumerate(positions):
            fading = sample_fading(self.geom_rng, config.fading_variance)
            gain = link_gain(fading, path_gain(pos.distance, self.constants),
                             self.constants)
            params = TrafficParams(
                mode=ModeChainParams(float(draws["alpha"][i]), float(draws["beta"][i])),
                alarm_gen=GenChainParams(float(draws["alpha_alarm"][i]),
                                         float(draws["beta_alarm"][i])),
                regular_gen=GenChainParams(float(draws["alpha_regular"][i]),
                                           float(draws["beta_regular"][i])))
            self.agents.append(_Agent(i, pos.distance, default_rng(agent_seqs[i]),
                                      gain.amplitude, params, training_end))

        # population traffic state
        self.mode = np.full(n, REGULAR, dtype=np.int8)
        self.gen = np.full(n, IDLE, dtype=np.int8)
        self.queue = np.zeros(n, dtype=np.int64)
        self._params = {name: np.ascontiguousarray(draws[name]) for name in draws}
        self._mode_buf = np.empty(n, dtype=np.int8)
        self._gen_buf = np.empty(n, dtype=np.int8)

        self._training = config.scheme != "fast" and n > 0 and config.horizon > 0
        if self._training:
            rows = config.training_slots + 1
            self._trace_mode = np.empty((rows, n), dtype=np.int8)
            self._trace_gen = np.empty((rows, n), dtype=np.int8)
            self._trace_mode[0] = self.mode
            self._trace_gen[0] = self.gen

        self.adapters: dict[tuple[int, int | None], DelayAdaptState] = {}

        # counters
        self.admitted: set[int] = set()
        self.no_alloc_count = 0
        self.access_delays: list[int] = []
        self.ul_success = 0
        self.ul_collision = 0
        self.alarm_tx = 0
        self.alarm_fail = 0
        self.dl_success = 0
        self.dl_failure = 0
        self.generated_total = 0
        self.delivered_total = 0
        self.dropped_total = 0

    # ------------------------------------------------------------------ phases

    def _beacon(self, slot: int) -> None:
        cfg = self.config
        if cfg.coherence_slots is None or slot == 0 or slot % cfg.coherence_slots:
            return
        for agent in self.agents:
            fading = sample_fading(self.geom_rng, cfg.fading_variance)
            gain = link_gain(fading, path_gain(agent.distance, self.constants),
                             self.constants)
            agent.amplitude = gain.amplitude
        by_id = {a.mtd_id: a for a in self.agents}
        for _, _, member in self.table.members():
            member.channel_amplitude = by_id[member.mtd_id].amplitude
            member.received_power = member.tx_power * member.channel_amplitude ** 2

    def _contention(self, slot: int) -> list[tuple[int, _Agent]]:
        choices: dict[int, list[_Agent]] = {}
        for agent in self.agents:
            if agent.allocated or agent.next_attempt is None or slot < agent.next_attempt:
                continue
            if agent.cycle_start is None:
                agent.cycle_start = slot
            rb, agent.backoff = contention_attempt(agent.backoff,
                                                   self.config.w_contention, agent.rng)
            self.log.append(slot, agent.mtd_id, "contention_tx", rb=rb)
            choices.setdefault(rb, []).append(agent)
        received = []
        for rb in sorted(choices):
            contenders = choices[rb]
            if len(contenders) == 1:
                agent = contenders[0]
                agent.backoff = register_success(agent.backoff)
                received.append((rb, agent))
            else:
                for agent in contenders:
                    self.log.append(slot, agent.mtd_id, "contention_collision", rb=rb)
                    agent.backoff = register_collision(agent.backoff,
                                                       self.config.backoff_cap,
                                                       agent.rng)
                    agent.next_attempt = slot + 1 + agent.backoff.wait_remaining
        return received

    def _grant(self, agent: _Agent, tag: int | None, result, slot: int) -> None:
        member = self.table.rows[result.rb_index][-1]
        if result.via_relaxation:
            offset = int(agent.rng.integers(self.config.frame_length))
            member.frame_offset = offset
            state = DelayAdaptState(frame_offset=offset)
        else:
            state = DelayAdaptState(frame_offset=None)
        self.adapters[(agent.mtd_id, tag)] = state
        agent.grant_tags.append(tag)
        self.log.append(slot, agent.mtd_id, "allocated", rb=result.rb_index,
                        level=result.power_level_index,
                        mode=MODE_NAMES[member.mode], relax=result.via_relaxation)

    def _allocate(self, slot: int, requests: list[tuple[int, _Agent]]) -> None:
        cfg = self.config
        for _, agent in requests:
            current_mode = int(self.mode[agent.mtd_id])
            granted = False
            if cfg.scheme == "fast":
                result = allocate_fast(self.table, agent.mtd_id, agent.amplitude,
                                       self.ladder, self.sic_cfg, mode=current_mode)
                if result.allocated:
                    self._grant(agent, None, result, slot)
                    granted = True
            elif cfg.scheme == "massive":
                result = allocate_massive(self.table, agent.mtd_id, agent.amplitude,
                                          agent.pi_act_est, self.ladder, self.sic_cfg,
                                          cfg.activity_threshold, mode=current_mode)
                if result.allocated:
                    self._grant(agent, None, result, slot)
                    granted = True
            else:  # qos: alarm grant first, then regular; both or nothing
                pending_before = set(self.table.pending_updates)
                res_alarm = allocate_qos(self.table, agent.mtd_id, agent.amplitude,
                                         agent.estimate, ALARM, self.ladder,
                                         self.sic_cfg, cfg.activity_threshold,
                                         cfg.activity_model)
                if res_alarm.allocated:
                    res_reg = allocate_qos(self.table, agent.mtd_id, agent.amplitude,
                                           agent.estimate, REGULAR, self.ladder,
                                           self.sic_cfg, cfg.activity_threshold,
                                           cfg.activity_model)
                    if res_reg.allocated:
                        self._grant(agent, ALARM, res_alarm, slot)
                        self._grant(agent, REGULAR, res_reg, slot)
                        granted = True
                    else:
                        remove_mtd(self.table, agent.mtd_id, mode=ALARM)
                        self.table.pending_updates = pending_before
            if granted:
                agent.allocated = True
                agent.next_attempt = None
                agent.consecutive_failures = 0
                self.admitted.add(agent.mtd_id)
                if agent.cycle_start is not None:
                    self.access_delays.append(slot - agent.cycle_start)
                agent.cycle_start = None
            else:
                self.log.append(slot, agent.mtd_id, "no_alloc")
                self.no_alloc_count += 1
                agent.backoff = BackoffState()
                agent.next_attempt = slot + cfg.hold_off_slots
                agent.cycle_start = None

    def _uplink(self, slot: int) -> None:
        cfg = self.config
        allocated_agents = [a for a in self.agents if a.allocated]
        if not allocated_agents:
            return
        queues = {a.mtd_id: int(self.queue[a.mtd_id]) for a in allocated_agents}
        modes = {a.mtd_id: int(self.mode[a.mtd_id]) for a in allocated_agents}
        rngs = {a.mtd_id: a.rng for a in allocated_agents}
        outcomes = uplink_phase(self.table, slot, cfg.frame_length, self.sic_cfg,
                                queues, modes, self.adapters, rngs,
                                mode_tagged=cfg.scheme == "qos")
        by_id = {a.mtd_id: a for a in allocated_agents}
        for out in outcomes:
            agent = by_id[out.mtd_id]
            mode_name = MODE_NAMES[out.mode]
            if out.mode == ALARM:
                self.alarm_tx += 1
            if out.success:
                self.ul_success += 1
                self.delivered_total += 1
                self.queue[out.mtd_id] = queues[out.mtd_id]
                agent.consecutive_failures = 0
                self.log.append(slot, out.mtd_id, "ul_success", rb=out.rb, mode=mode_name)
            else:
                self.ul_collision += 1
                if out.mode == ALARM:
                    self.alarm_fail += 1
                agent.consecutive_failures += 1
                self.log.append(slot, out.mtd_id, "ul_collision", rb=out.rb,
                                mode=mode_name)
            if out.offset_changed:
                self.log.append(slot, out.mtd_id, "delay_change", offset=out.new_offset)
        if cfg.requeue_failures is not None:
            for agent in allocated_agents:
                if agent.consecutive_failures >= cfg.requeue_failures:
                    self._evict(agent, slot)

    def _evict(self, agent: _Agent, slot: int) -> None:
        """QoS-degradation re-entry: drop every grant and contend again."""
        for tag in agent.grant_tags:
            location = self.table.find(agent.mtd_id, tag)
            rb = location[0] if location else None
            remove_mtd(self.table, agent.mtd_id, mode=tag)
            self.adapters.pop((agent.mtd_id, tag), None)
            aux = {"rb": rb}
            if tag is not None:
                aux["mode"] = MODE_NAMES[tag]
            self.log.append(slot, agent.mtd_id, "removed", **aux)
        agent.grant_tags = []
        agent.allocated = False
        agent.consecutive_failures = 0
        agent.backoff = BackoffState()
        agent.next_attempt = slot + 1
        agent.cycle_start = None

    def _downlink(self, slot: int) -> None:
        for rb in sorted(self.table.pending_updates):
            row = self.table.rows[rb]
            if not row:
                continue
            outcome = sic_feasible(row, self.sic_cfg)
            for m in row:
                if outcome.per_member[m.mtd_id]:
                    self.dl_success += 1
                    self.log.append(slot, m.mtd_id, "dl_success", rb=rb)
                else:
                    self.dl_failure += 1
                    self.log.append(slot, m.mtd_id, "dl_failure", rb=rb)
        self.table.pending_updates.clear()

    def _step_traffic(self, slot: int) -> None:
        n = self.n_mtds
        if n == 0:
            return
        cfg = self.config
        u_mode = self.traffic_rng.random(n)
        u_gen = self.traffic_rng.random(n)
        p = self._params
        _kernels.step_population(self.mode, self.gen, u_mode, u_gen,
                                 p["alpha"], p["beta"], p["alpha_alarm"],
                                 p["beta_alarm"], p["alpha_regular"],
                                 p["beta_regular"], self._mode_buf, self._gen_buf)
        switched = np.nonzero(self._mode_buf != self.mode)[0]
        for idx in switched:
            self.log.append(slot, int(idx), "mode_switch",
                            mode=MODE_NAMES[int(self._mode_buf[idx])])
        generated = self._gen_buf == GENERATING
        n_generated = int(np.count_nonzero(generated))
        dropped = generated & (self.queue >= cfg.queue_capacity)
        n_dropped = int(np.count_nonzero(dropped))
        self.queue[generated & ~dropped] += 1
        self.generated_total += n_generated
        self.dropped_total += n_dropped
        self.mode[:] = self._mode_buf
        self.gen[:] = self._gen_buf
        if self._training and slot < cfg.training_slots:
            self._trace_mode[slot + 1] = self.mode
            self._trace_gen[slot + 1] = self.gen
            if slot + 1 == cfg.training_slots:
                self._finish_training()

    def _finish_training(self) -> None:
        for agent in self.agents:
            modes = self._trace_mode[:, agent.mtd_id]
            gens = self._trace_gen[:, agent.mtd_id]
            agent.estimate = estimate_params(modes, np.stack([modes, gens], axis=1))
            agent.pi_act_est = activity_probability(agent.estimate.to_params(),
                                                    method=self.config.activity_model)
        self._training = False
        self._trace_mode = None
        self._trace_gen = None

    # --------------------------------------------------------------------- run

    def run(self, check_invariants: bool = False) -> tuple[Metrics, EventLog]:
        cfg = self.config
        for slot in range(cfg.horizon):
            self._beacon(slot)
            requests = self._contention(slot)
            self._allocate(slot, requests)
            self._uplink(slot)
            self._downlink(slot)
            self._step_traffic(slot)
            if check_invariants:
                check_table_invariants(self.table, cfg.scheme, self.sic_cfg,
                                       cfg.activity_threshold)
        return self._metrics(), self.log

    def _metrics(self) -> Metrics:
        ul_total = self.ul_success + self.ul_collision
        dl_total = self.dl_success + self.dl_failure
        horizon = self.config.horizon
        return Metrics(
            admitted_count=len(self.admitted),
            no_alloc_count=self.no_alloc_count,
            mean_access_delay=(sum(self.access_delays) / len(self.access_delays)
                               if self.access_delays else 0.0),
            ul_success_rate=self.ul_success / ul_total if ul_total else 0.0,
            ul_collision_rate=self.ul_collision / ul_total if ul_total else 0.0,
            alarm_failure_rate=self.alarm_fail / self.alarm_tx if self.alarm_tx else 0.0,
            dl_failure_rate=self.dl_failure / dl_total if dl_total else 0.0,
            throughput=self.delivered_total / horizon if horizon else 0.0,
            occupancy_hist=tuple(self.table.occupancy_histogram()),
        )


def run(config: SimConfig, check_invariants: bool = False) -> tuple[Metrics, EventLog]:
    """Validate the config, simulate the full horizon, and return (metrics, log)."""
    return MacEngine(config).run(check_invariants=check_invariants)
