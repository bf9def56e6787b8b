"""Independent brute-force oracles.

Nothing here imports the package under test; every function re-derives its
answer from first principles so the tests cross-check rather than echo the
implementation.
"""

from __future__ import annotations

import itertools

import numpy as np


def chain_feasible(received_powers, noise, threshold) -> bool:
    """Strongest-first cancellation walk, computed directly."""
    order = sorted(received_powers, reverse=True)
    remaining = sum(order) + noise
    for rp in order:
        remaining -= rp
        if rp < threshold * remaining:
            return False
    return True


def any_order_feasible(received_powers, noise, threshold) -> bool:
    """True iff SOME decode permutation decodes everyone (greedy criterion:
    each decoded member must clear the threshold against all not-yet-decoded
    power plus noise)."""
    n = len(received_powers)
    for order in itertools.permutations(range(n)):
        remaining = sum(received_powers) + noise
        ok = True
        for idx in order:
            rp = received_powers[idx]
            if rp < threshold * (remaining - rp):
                ok = False
                break
            remaining -= rp
        if ok:
            return True
    return n == 0


def stationary_by_linear_solve(alpha: float, beta: float) -> np.ndarray:
    """Solve pi @ P = pi with sum(pi) = 1 for P = [[1-a, a], [1-b, b]]."""
    P = np.array([[1.0 - alpha, alpha], [1.0 - beta, beta]])
    A = np.vstack([P.T - np.eye(2), np.ones(2)])
    b = np.array([0.0, 0.0, 1.0])
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def activity_literal(alpha_a, beta_a, alpha_r, beta_r) -> float:
    """Direct evaluation of the two-term activity formula, no clamping."""
    return beta_a / (1.0 + beta_a + alpha_a) + beta_r / (1.0 + beta_r + alpha_r)


def first_admitting_cell(cluster_rps, c_max, candidate_amp, levels, noise,
                         threshold):
    """Brute-force sweep over (level, cluster): first cell where inserting the
    candidate keeps the whole cluster chain-feasible.  ``cluster_rps`` is a
    list of per-cluster received-power lists.  Returns (level, rb) or None."""
    for level, power in enumerate(levels):
        rp = power * candidate_amp ** 2
        for rb, existing in enumerate(cluster_rps):
            if len(existing) >= c_max:
                continue
            if chain_feasible(list(existing) + [rp], noise, threshold):
                return level, rb
    return None
