"""Seedable single-cell simulator of power-domain NOMA uplink grant allocation.

Three admission schemes share one table: SIC-feasible fast grants, massive
grants that tolerate SIC collisions among rarely active devices, and QoS-aware
grants that keep alarm-mode devices on top of the decoding order.
"""

__version__ = "0.1.0"

from .allocation import (AllocationResult, AllocationTable, PowerLadder,
                         allocate_fast, allocate_massive, allocate_qos,
                         cluster_info, priority_check, remove_mtd)
from .geometry import (ChannelConstants, LinkGain, Position, link_gain, path_gain,
                       received_power, sample_fading, sample_ppp)
from .mac import (BackoffState, ConfigError, DelayAdaptState, EventLog, MacEngine,
                  SimConfig, TrafficSpec, adapt_delay, run)
from .metrics import Metrics, emit, metrics_from_log
from .scenario import ScenarioConfig, parse_config, run_sweep
from .sic import (ClusterMember, SicConfig, SicOutcome, collision_set,
                  downlink_sic_feasible, sic_feasible)
from .traffic import (ALARM, GENERATING, IDLE, REGULAR, GenChainParams,
                      ModeChainParams, MtdTrafficState, TrafficEstimate,
                      TrafficParams, activity_probability, estimate_params,
                      steady_state, step_generation, step_mode)
