"""Successive interference cancellation feasibility for power-domain clusters.

Decoding walks members in descending received power; layer k decodes iff its
SINR against the not-yet-cancelled layers meets the threshold, given that all
stronger layers were decoded and cancelled perfectly.  The first failing layer
drags every weaker member down with it.  The downlink mirrors the uplink under
TDD reciprocity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .traffic import REGULAR


class ClusterSizeError(ValueError):
    """Raised when a candidate cluster exceeds the configured maximum size."""


@dataclass
class ClusterMember:
    """One MTD's entry in a cluster.

    ``frame_offset`` is None for members that transmit in every backlogged
    slot and an in-frame slot index for time-multiplexed members.
    """

    mtd_id: int
    channel_amplitude: float
    power_level_index: int
    tx_power: float
    received_power: float
    mode: int = REGULAR
    pi_act: float = 0.0
    frame_offset: int | None = None

    @classmethod
    def at_power(cls, mtd_id: int, channel_amplitude: float, power_level_index: int,
                 tx_power: float, **kwargs) -> "ClusterMember":
        """Build a member with received power derived from p * |h|^2."""
        rp = tx_power * channel_amplitude ** 2
        return cls(mtd_id, channel_amplitude, power_level_index, tx_power, rp, **kwargs)


@dataclass(frozen=True)
class SicConfig:
    """SIC decoding configuration: linear SINR threshold, noise, cluster cap."""

    sinr_threshold: float = 1.0
    noise_power: float = 1e-15
    max_cluster_size: int = 4

    def __post_init__(self) -> None:
        if self.sinr_threshold <= 0:
            raise ValueError("sinr_threshold must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if self.max_cluster_size < 1:
            raise ValueError("max_cluster_size must be at least 1")


@dataclass(frozen=True)
class SicOutcome:
    """Feasibility verdict plus the per-member decoded flags."""

    feasible: bool
    per_member: dict[int, bool] = field(default_factory=dict)


def _ordered(members: list[ClusterMember]) -> list[ClusterMember]:
    # Exact received-power ties are ordered by id for reproducibility; the
    # SINR walk fails such ties on its own whenever the threshold is >= 1.
    return sorted(members, key=lambda m: (-m.received_power, m.mtd_id))


def sic_feasible(members: list[ClusterMember], cfg: SicConfig) -> SicOutcome:
    """Decide whether every member of a simultaneous cluster decodes.

    Raises :class:`ClusterSizeError` when the cluster exceeds the cap.  An
    empty cluster is vacuously feasible.
    """
    if len(members) > cfg.max_cluster_size:
        raise ClusterSizeError(
            f"cluster of {len(members)} exceeds max size {cfg.max_cluster_size}")
    if not members:
        return SicOutcome(feasible=True)
    ordered = _ordered(members)
    rp = np.array([m.received_power for m in ordered], dtype=np.float64)
    fail_at = _kernels.sic_first_failure(rp, cfg.noise_power, cfg.sinr_threshold)
    if fail_at < 0:
        return SicOutcome(True, {m.mtd_id: True for m in ordered})
    per_member = {m.mtd_id: i < fail_at for i, m in enumerate(ordered)}
    return SicOutcome(False, per_member)


def collision_set(members: list[ClusterMember], cfg: SicConfig) -> set[int]:
    """Ids of the members that fail to decode; empty iff the cluster is feasible."""
    outcome = sic_feasible(members, cfg)
    return {mtd_id for mtd_id, decoded in outcome.per_member.items() if not decoded}


def downlink_sic_feasible(members: list[ClusterMember], cfg: SicConfig) -> SicOutcome:
    """Downlink mirror of :func:`sic_feasible`.

    Cluster members decode the superposed downlink with the same received-power
    ordering and threshold, assuming TDD channel reciprocity and shared cluster
    info (every member knows the others' CSI and power levels).
    """
    return sic_feasible(members, cfg)
