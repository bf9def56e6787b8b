"""Hot inner loops: two-state Markov chain stepping and the SIC layer walk.

Every kernel exists as a plain Python/numpy implementation; when numba is
importable (and ``NOMAGRANT_DISABLE_NUMBA`` is unset) the sequential loops are
compiled with ``@njit``.  Both paths consume the same pre-drawn uniforms and
perform the same comparisons, so results are bit-identical either way.

State convention for all chains: state 0 = regular/idle, state 1 =
alarm/generating.  A chain in state 0 moves to 1 with probability ``p01``;
a chain in state 1 stays with probability ``p11``.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("NOMAGRANT_DISABLE_NUMBA", "") not in ("1", "true", "yes")


def _chain_path_py(uniforms, p01, p11, start):
    """Trace of a two-state chain driven by pre-drawn uniforms.

    Returns an int8 array of length ``len(uniforms) + 1`` whose first entry
    is ``start``; entry t+1 is the state after consuming ``uniforms[t]``.
    """
    out = np.empty(uniforms.shape[0] + 1, dtype=np.int8)
    out[0] = start
    s = start
    for t in range(uniforms.shape[0]):
        if s == 1:
            s = 1 if uniforms[t] < p11 else 0
        else:
            s = 1 if uniforms[t] < p01 else 0
        out[t + 1] = s
    return out


def _gen_path_py(uniforms, modes, p01_a, p11_a, p01_r, p11_r, start):
    """Generation-chain trace driven by a mode trace.

    ``modes`` has length ``len(uniforms) + 1``; the transition consuming
    ``uniforms[t]`` uses the alarm matrix when ``modes[t + 1] == 1`` and the
    regular matrix otherwise (the mode in effect when the step is taken).
    """
    out = np.empty(uniforms.shape[0] + 1, dtype=np.int8)
    out[0] = start
    g = start
    for t in range(uniforms.shape[0]):
        if modes[t + 1] == 1:
            p01 = p01_a
            p11 = p11_a
        else:
            p01 = p01_r
            p11 = p11_r
        if g == 1:
            g = 1 if uniforms[t] < p11 else 0
        else:
            g = 1 if uniforms[t] < p01 else 0
        out[t + 1] = g
    return out


def _step_population_loop(mode, gen, u_mode, u_gen, alpha, beta, a_a, b_a, a_r, b_r,
                          out_mode, out_gen):
    """One slot of mode+generation stepping for a whole population (loop form)."""
    for i in range(mode.shape[0]):
        m = mode[i]
        if m == 1:
            m = 1 if u_mode[i] < beta[i] else 0
        else:
            m = 1 if u_mode[i] < alpha[i] else 0
        if m == 1:
            p01 = a_a[i]
            p11 = b_a[i]
        else:
            p01 = a_r[i]
            p11 = b_r[i]
        g = gen[i]
        if g == 1:
            g = 1 if u_gen[i] < p11 else 0
        else:
            g = 1 if u_gen[i] < p01 else 0
        out_mode[i] = m
        out_gen[i] = g


def _step_population_np(mode, gen, u_mode, u_gen, alpha, beta, a_a, b_a, a_r, b_r,
                        out_mode, out_gen):
    """Vectorized numpy equivalent of :func:`_step_population_loop`."""
    new_mode = np.where(mode == 1, u_mode < beta, u_mode < alpha)
    p01 = np.where(new_mode, a_a, a_r)
    p11 = np.where(new_mode, b_a, b_r)
    new_gen = np.where(gen == 1, u_gen < p11, u_gen < p01)
    out_mode[:] = new_mode
    out_gen[:] = new_gen


def _sic_first_failure_py(rp_desc, noise_power, threshold):
    """Index of the first undecodable layer in descending-power order, -1 if none.

    Layer k decodes iff rp[k] >= threshold * (sum of weaker layers + noise);
    the walk from weakest to strongest keeps the smallest failing index, which
    is exactly where the strongest-first cancellation chain breaks.
    """
    first_fail = -1
    interference = 0.0
    for k in range(rp_desc.shape[0] - 1, -1, -1):
        if rp_desc[k] < threshold * (interference + noise_power):
            first_fail = k
        interference += rp_desc[k]
    return first_fail


if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    chain_path = njit(cache=True)(_chain_path_py)
    gen_path = njit(cache=True)(_gen_path_py)
    step_population = njit(cache=True)(_step_population_loop)
    sic_first_failure = njit(cache=True)(_sic_first_failure_py)
else:
    chain_path = _chain_path_py
    gen_path = _gen_path_py
    step_population = _step_population_np
    sic_first_failure = _sic_first_failure_py
