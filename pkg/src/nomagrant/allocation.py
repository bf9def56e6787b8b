"""Base-station allocation table and the three admission algorithms.

All schemes sweep transmit power levels ascending and clusters in row order,
tentatively inserting the candidate into the first free slot of each cluster:

* fast        — keep the insertion iff the whole cluster stays SIC-feasible.
* massive     — on SIC failure, still admit when the summed activity
                probability of the colliding members is below a threshold
                (those members will be separated in time by frame offsets).
* qos         — massive plus a priority gate: a regular-mode grant may never
                outrank an alarm-mode grant inside the same cluster.

Failed tentative insertions never touch the table (copy-on-try), so a
rejection leaves it bit-identical.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

from .sic import ClusterMember, SicConfig, collision_set, sic_feasible
from .traffic import (ACTIVITY_LITERAL, ALARM, MODE_NAMES, REGULAR, TrafficEstimate,
                      activity_probability)

DEFAULT_ACTIVITY_THRESHOLD = 0.95


class AllocationError(ValueError):
    """Base class for admission errors."""


class AlreadyAllocatedError(AllocationError):
    """Candidate already holds a slot (for its grant mode) in the table."""


class MissingEstimateError(AllocationError):
    """Scheme requires a traffic estimate the candidate did not supply."""


class MemberNotFoundError(KeyError):
    """Requested member is not present in the table."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class PowerLadder:
    """Ordered transmit power levels in watts, lowest first."""

    levels: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.levels:
            raise ValueError("power ladder needs at least one level")
        if any(p <= 0 for p in self.levels):
            raise ValueError("power levels must be positive")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("power levels must be strictly increasing")

    @classmethod
    def from_dbm_range(cls, min_dbm: float = 10.0, max_dbm: float = 23.0,
                       count: int = 8) -> "PowerLadder":
        """``count`` levels linearly spaced in dB between the two endpoints."""
        if count < 1:
            raise ValueError("count must be at least 1")
        if count == 1:
            return cls((dbm_to_watt(min_dbm),))
        step = (max_dbm - min_dbm) / (count - 1)
        return cls(tuple(dbm_to_watt(min_dbm + i * step) for i in range(count)))


class AllocationTable:
    """Cluster table with one row per data resource block.

    Rows hold at most ``c_max`` members and stay left-packed; every mutation
    records the touched row in ``pending_updates`` so the simulator can push
    cluster-info updates to the affected members on the next downlink.
    """

    def __init__(self, w_total: int, w_contention: int, c_max: int):
        if w_contention < 0 or w_contention >= w_total:
            raise ValueError("need 0 <= w_contention < w_total")
        if c_max < 1:
            raise ValueError("c_max must be at least 1")
        self.w_total = w_total
        self.w_contention = w_contention
        self.c_max = c_max
        self.rows: list[list[ClusterMember]] = [[] for _ in range(w_total - w_contention)]
        self.pending_updates: set[int] = set()

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def members(self):
        for rb, row in enumerate(self.rows):
            for slot, member in enumerate(row):
                yield rb, slot, member

    def contains(self, mtd_id: int, mode: int | None = None) -> bool:
        return any(m.mtd_id == mtd_id and (mode is None or m.mode == mode)
                   for _, _, m in self.members())

    def find(self, mtd_id: int, mode: int | None = None) -> tuple[int, int] | None:
        for rb, slot, m in self.members():
            if m.mtd_id == mtd_id and (mode is None or m.mode == mode):
                return rb, slot
        return None

    def member_count(self) -> int:
        return sum(len(row) for row in self.rows)

    def occupancy_histogram(self) -> list[int]:
        hist = [0] * (self.c_max + 1)
        for row in self.rows:
            hist[len(row)] += 1
        return hist

    def clone(self) -> "AllocationTable":
        return copy.deepcopy(self)

    def dump(self) -> str:
        """One line per occupied slot: rb, slot, mtd_id, power_level, mode, pi_act."""
        lines = [f"{rb} {slot} {m.mtd_id} {m.power_level_index} "
                 f"{MODE_NAMES[m.mode]} {m.pi_act:.6g}"
                 for rb, slot, m in self.members()]
        return "\n".join(lines)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AllocationTable):
            return NotImplemented
        return (self.w_total == other.w_total
                and self.w_contention == other.w_contention
                and self.c_max == other.c_max
                and self.rows == other.rows
                and self.pending_updates == other.pending_updates)


@dataclass(frozen=True)
class AllocationResult:
    """Outcome of one admission attempt."""

    outcome: str  # "allocated" | "no_alloc"
    rb_index: int | None = None
    power_level_index: int | None = None
    cluster_info: tuple[tuple[int, float, float], ...] | None = None
    via_relaxation: bool = False
    updated_member_ids: tuple[int, ...] = ()

    @property
    def allocated(self) -> bool:
        return self.outcome == "allocated"

    @classmethod
    def no_alloc(cls) -> "AllocationResult":
        return cls("no_alloc")


def cluster_info(table: AllocationTable, rb_index: int) -> list[tuple[int, float, float]]:
    """Snapshot of one row as (mtd_id, channel_amplitude, tx_power), strongest first."""
    if not 0 <= rb_index < table.n_rows:
        raise IndexError(f"rb_index {rb_index} outside [0, {table.n_rows})")
    row = sorted(table.rows[rb_index], key=lambda m: (-m.received_power, m.mtd_id))
    return [(m.mtd_id, m.channel_amplitude, m.tx_power) for m in row]


def _sweep(table: AllocationTable, ladder: PowerLadder, cfg: SicConfig,
           mtd_id: int, channel_amplitude: float, mode: int, pi_act: float,
           admit, skip_own_id: bool) -> AllocationResult:
    """Shared power-then-cluster sweep; ``admit(trial, member)`` decides admission."""
    for level_idx, power in enumerate(ladder.levels):
        for rb, cluster in enumerate(table.rows):
            if len(cluster) >= table.c_max:
                continue
            if skip_own_id and any(m.mtd_id == mtd_id for m in cluster):
                continue
            member = ClusterMember.at_power(mtd_id, channel_amplitude, level_idx,
                                            power, mode=mode, pi_act=pi_act)
            trial = cluster + [member]
            ok, via_relaxation = admit(trial, member)
            if ok:
                cluster.append(member)
                table.pending_updates.add(rb)
                info = tuple(cluster_info(table, rb))
                return AllocationResult("allocated", rb, level_idx, info,
                                        via_relaxation,
                                        tuple(m.mtd_id for m in cluster))
    return AllocationResult.no_alloc()


def allocate_fast(table: AllocationTable, mtd_id: int, channel_amplitude: float,
                  ladder: PowerLadder, cfg: SicConfig,
                  mode: int = REGULAR) -> AllocationResult:
    """Admit a candidate into the first cluster that stays SIC-feasible."""
    if table.contains(mtd_id):
        raise AlreadyAllocatedError(f"mtd {mtd_id} already in the table")

    def admit(trial, member):
        return sic_feasible(trial, cfg).feasible, False

    return _sweep(table, ladder, cfg, mtd_id, channel_amplitude, mode, 0.0,
                  admit, skip_own_id=False)


def allocate_massive(table: AllocationTable, mtd_id: int, channel_amplitude: float,
                     pi_act: float | None, ladder: PowerLadder, cfg: SicConfig,
                     activity_threshold: float = DEFAULT_ACTIVITY_THRESHOLD,
                     mode: int = REGULAR) -> AllocationResult:
    """Admit a candidate, tolerating SIC failure among rarely active members.

    On SIC failure the candidate still enters the cluster when the summed
    activity probability of the colliding members stays below the threshold;
    such members are separated in time by the MAC's delay adaptation.
    """
    if pi_act is None or (isinstance(pi_act, float) and math.isnan(pi_act)):
        raise MissingEstimateError("massive admission needs the candidate's pi_act")
    if table.contains(mtd_id):
        raise AlreadyAllocatedError(f"mtd {mtd_id} already in the table")

    def admit(trial, member):
        if sic_feasible(trial, cfg).feasible:
            return True, False
        colliding = collision_set(trial, cfg)
        by_id = {m.mtd_id: m for m in trial}
        load = sum(by_id[i].pi_act for i in colliding)
        return load < activity_threshold, True

    return _sweep(table, ladder, cfg, mtd_id, channel_amplitude, mode, float(pi_act),
                  admit, skip_own_id=False)


def priority_check(cluster: list[ClusterMember], newcomer: ClusterMember) -> bool:
    """Alarm-priority gate for a cluster whose last element is the newcomer.

    Fails iff a regular newcomer would outrank an existing alarm member, or an
    alarm newcomer would be outranked by an existing regular member.
    """
    if newcomer.mode == REGULAR:
        return not any(m.mode == ALARM and m.received_power < newcomer.received_power
                       for m in cluster)
    return not any(m.mode == REGULAR and m.received_power > newcomer.received_power
                   for m in cluster)


def allocate_qos(table: AllocationTable, mtd_id: int, channel_amplitude: float,
                 estimate: TrafficEstimate | None, grant_mode: int,
                 ladder: PowerLadder, cfg: SicConfig,
                 activity_threshold: float = DEFAULT_ACTIVITY_THRESHOLD,
                 activity_method: str = ACTIVITY_LITERAL) -> AllocationResult:
    """Admit one mode-tagged grant under both the SIC/activity and priority gates.

    Call once per mode the MTD registers; the grants of one MTD land on
    distinct resource blocks.  Admission (feasible or relaxed) additionally
    requires the alarm-priority ordering to survive the insertion.
    """
    if estimate is None:
        raise MissingEstimateError("qos admission needs the candidate's traffic estimate")
    if table.contains(mtd_id, mode=grant_mode):
        raise AlreadyAllocatedError(
            f"mtd {mtd_id} already holds a {MODE_NAMES[grant_mode]} grant")
    pi_act = activity_probability(estimate.to_params(), method=activity_method)

    def admit(trial, member):
        if not priority_check(trial, member):
            return False, False
        if sic_feasible(trial, cfg).feasible:
            return True, False
        colliding = collision_set(trial, cfg)
        by_id = {m.mtd_id: m for m in trial}
        load = sum(by_id[i].pi_act for i in colliding)
        return load < activity_threshold, True

    return _sweep(table, ladder, cfg, mtd_id, channel_amplitude, grant_mode, pi_act,
                  admit, skip_own_id=True)


def remove_mtd(table: AllocationTable, mtd_id: int,
               mode: int | None = None) -> AllocationTable:
    """Remove a member (optionally a specific mode grant); rows stay left-packed."""
    location = table.find(mtd_id, mode)
    if location is None:
        raise MemberNotFoundError(mtd_id)
    rb, slot = location
    del table.rows[rb][slot]
    table.pending_updates.add(rb)
    return table
