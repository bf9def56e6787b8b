"""Two-level Markov traffic model and its distributed parameter estimation.

An MTD switches between regular and alarm modes following a two-state chain
with transition matrix [[1-alpha, alpha], [1-beta, beta]] (row = current
state, state 0 = regular).  In each mode a second two-state chain governs
packet generation with its own (alpha, beta) pair; one packet is enqueued per
slot the generation chain spends in the generating state.

Each device can estimate all six parameters from its own observed trace by
Laplace-smoothed transition frequencies, which is what it reports to the base
station during contention.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.random import Generator

from . import _kernels

REGULAR, ALARM = 0, 1
IDLE, GENERATING = 0, 1

MODE_NAMES = {REGULAR: "regular", ALARM: "alarm"}

DEFAULT_QUEUE_CAPACITY = 100

ACTIVITY_LITERAL = "literal"
ACTIVITY_STATIONARY = "stationary"


class InsufficientDataError(ValueError):
    """Raised when a trace is too short to contain any transition."""


class DegenerateChainError(ValueError):
    """Raised for chains without a unique stationary distribution."""


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ModeChainParams:
    """Mode chain: alpha = P(regular -> alarm), beta = P(alarm stays alarm)."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        _check_prob("alpha", self.alpha)
        _check_prob("beta", self.beta)


@dataclass(frozen=True)
class GenChainParams:
    """Generation chain of one mode: alpha_on = P(idle -> generating),
    beta_on = P(generating stays generating)."""

    alpha_on: float
    beta_on: float

    def __post_init__(self) -> None:
        _check_prob("alpha_on", self.alpha_on)
        _check_prob("beta_on", self.beta_on)


@dataclass(frozen=True)
class TrafficParams:
    """Full six-parameter traffic description plus the derived activity probability."""

    mode: ModeChainParams
    alarm_gen: GenChainParams
    regular_gen: GenChainParams
    pi_act: float = field(default=-1.0)

    def __post_init__(self) -> None:
        if self.pi_act < 0:
            object.__setattr__(self, "pi_act", activity_probability(self))
        _check_prob("pi_act", self.pi_act)


@dataclass(frozen=True)
class MtdTrafficState:
    """One MTD's traffic state: mode, generation state, and packet queue."""

    mode: int = REGULAR
    gen_state: int = IDLE
    queue: int = 0

    def __post_init__(self) -> None:
        if self.queue < 0:
            raise ValueError("queue must be non-negative")


@dataclass(frozen=True)
class TrafficEstimate:
    """Laplace-smoothed estimates of the six chain parameters."""

    alpha: float
    beta: float
    alpha_alarm: float
    beta_alarm: float
    alpha_regular: float
    beta_regular: float
    sample_count: int

    def to_params(self) -> TrafficParams:
        return TrafficParams(
            mode=ModeChainParams(self.alpha, self.beta),
            alarm_gen=GenChainParams(self.alpha_alarm, self.beta_alarm),
            regular_gen=GenChainParams(self.alpha_regular, self.beta_regular),
        )


def step_mode(state: MtdTrafficState, params: ModeChainParams,
              rng: Generator) -> MtdTrafficState:
    """Advance the mode chain by one slot."""
    u = rng.random()
    if state.mode == ALARM:
        mode = ALARM if u < params.beta else REGULAR
    else:
        mode = ALARM if u < params.alpha else REGULAR
    return replace(state, mode=mode)


def step_generation(state: MtdTrafficState, params: TrafficParams, rng: Generator,
                    queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
                    ) -> tuple[MtdTrafficState, bool]:
    """Advance the generation chain of the current mode by one slot.

    A packet is generated whenever the chain lands in the generating state;
    it is enqueued unless the queue is at capacity (drop-tail).
    """
    chain = params.alarm_gen if state.mode == ALARM else params.regular_gen
    u = rng.random()
    if state.gen_state == GENERATING:
        gen = GENERATING if u < chain.beta_on else IDLE
    else:
        gen = GENERATING if u < chain.alpha_on else IDLE
    generated = gen == GENERATING
    queue = state.queue
    if generated and queue < queue_capacity:
        queue += 1
    return replace(state, gen_state=gen, queue=queue), generated


def step_slot(state: MtdTrafficState, params: TrafficParams, rng: Generator,
              queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
              ) -> tuple[MtdTrafficState, bool]:
    """Canonical per-slot update: mode first, then generation under the new mode."""
    state = step_mode(state, params.mode, rng)
    return step_generation(state, params, rng, queue_capacity)


def activity_probability(params: TrafficParams, method: str = ACTIVITY_LITERAL,
                         clamp: bool = True) -> float:
    """Probability that an MTD is actively generating traffic.

    The default evaluates beta_a/(1+beta_a+alpha_a) + beta_r/(1+beta_r+alpha_r)
    and clamps the result to [0, 1].  The "stationary" alternative weights each
    mode's stationary generating probability by the mode chain's stationary
    occupancy, which is bounded by construction.
    """
    a = params.alarm_gen
    r = params.regular_gen
    if method == ACTIVITY_LITERAL:
        value = (a.beta_on / (1.0 + a.beta_on + a.alpha_on)
                 + r.beta_on / (1.0 + r.beta_on + r.alpha_on))
    elif method == ACTIVITY_STATIONARY:
        p_regular, p_alarm = steady_state(params.mode.alpha, params.mode.beta)
        gen_alarm = steady_state(a.alpha_on, a.beta_on)[1]
        gen_regular = steady_state(r.alpha_on, r.beta_on)[1]
        value = p_alarm * gen_alarm + p_regular * gen_regular
    else:
        raise ValueError(f"unknown activity method {method!r}")
    if clamp:
        value = min(1.0, max(0.0, value))
    return value


def steady_state(alpha: float, beta: float) -> tuple[float, float]:
    """Stationary distribution (p_state0, p_state1) of the two-state chain."""
    _check_prob("alpha", alpha)
    _check_prob("beta", beta)
    denom = alpha + 1.0 - beta
    if denom == 0.0:
        raise DegenerateChainError(
            "alpha=0 with beta=1 makes both states absorbing; no unique steady state")
    p1 = alpha / denom
    return 1.0 - p1, p1


def simulate_mode_trace(params: ModeChainParams, steps: int, rng: Generator,
                        start: int = REGULAR) -> np.ndarray:
    """Mode trace of length steps+1 (entry 0 is the initial state)."""
    uniforms = rng.random(steps)
    return _kernels.chain_path(uniforms, params.alpha, params.beta, start)


def simulate_generation_trace(modes: np.ndarray, params: TrafficParams,
                              rng: Generator, start: int = IDLE) -> np.ndarray:
    """Generation trace aligned with a mode trace (same length).

    The transition into entry t uses the matrix of ``modes[t]``, matching the
    canonical slot order where the mode is updated first.
    """
    modes = np.ascontiguousarray(modes, dtype=np.int8)
    uniforms = rng.random(len(modes) - 1)
    return _kernels.gen_path(uniforms, modes,
                             params.alarm_gen.alpha_on, params.alarm_gen.beta_on,
                             params.regular_gen.alpha_on, params.regular_gen.beta_on,
                             start)


def _smoothed(count_up: int, count_total: int) -> float:
    return (count_up + 1.0) / (count_total + 2.0)


def estimate_params(mode_trace: Sequence[int] | np.ndarray,
                    gen_trace: Sequence[tuple[int, int]],
                    ) -> TrafficEstimate:
    """Estimate all six parameters from an observed (mode, generation) trace.

    ``gen_trace`` pairs each slot's mode with its generation state; both traces
    must be aligned.  Each transition probability is the Laplace-smoothed
    frequency (count(s -> s') + 1) / (count(s -> .) + 2); a generation
    transition is attributed to the mode in effect when it was taken (the
    destination slot's mode).
    """
    modes = np.asarray(mode_trace, dtype=np.int8)
    pairs = np.asarray(gen_trace, dtype=np.int8)
    if modes.ndim != 1 or pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("mode_trace must be 1-d and gen_trace a sequence of pairs")
    if len(modes) != len(pairs):
        raise ValueError("mode and generation traces must be aligned")
    if len(modes) < 2:
        raise InsufficientDataError("need at least 2 observations to count a transition")
    if not np.all((modes == 0) | (modes == 1)):
        raise ValueError("modes must be 0 (regular) or 1 (alarm)")
    gens = pairs[:, 1]
    if not np.all((gens == 0) | (gens == 1)):
        raise ValueError("generation states must be 0 (idle) or 1 (generating)")

    mode_counts = np.bincount(2 * modes[:-1] + modes[1:], minlength=4)
    # index: governing mode * 4 + from-state * 2 + to-state
    gen_key = 4 * pairs[1:, 0] + 2 * gens[:-1] + gens[1:]
    gen_counts = np.bincount(gen_key, minlength=8)

    alpha = _smoothed(mode_counts[1], mode_counts[0] + mode_counts[1])
    beta = _smoothed(mode_counts[3], mode_counts[2] + mode_counts[3])
    alpha_regular = _smoothed(gen_counts[1], gen_counts[0] + gen_counts[1])
    beta_regular = _smoothed(gen_counts[3], gen_counts[2] + gen_counts[3])
    alpha_alarm = _smoothed(gen_counts[5], gen_counts[4] + gen_counts[5])
    beta_alarm = _smoothed(gen_counts[7], gen_counts[6] + gen_counts[7])
    return TrafficEstimate(alpha=float(alpha), beta=float(beta),
                           alpha_alarm=float(alpha_alarm), beta_alarm=float(beta_alarm),
                           alpha_regular=float(alpha_regular),
                           beta_regular=float(beta_regular),
                           sample_count=int(len(modes)))
