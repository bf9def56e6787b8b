"""Cross-check the numba kernels against their plain Python/numpy twins."""

from __future__ import annotations

import numpy as np
import pytest

from nomagrant import _kernels


@pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="numba path disabled")
def test_chain_path_matches_python(rng):
    for _ in range(20):
        u = rng.random(500)
        p01, p11 = rng.random(2)
        start = int(rng.integers(2))
        jitted = _kernels.chain_path(u, p01, p11, start)
        plain = _kernels._chain_path_py(u, p01, p11, start)
        assert np.array_equal(jitted, plain)


@pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="numba path disabled")
def test_gen_path_matches_python(rng):
    for _ in range(20):
        u = rng.random(400)
        modes = rng.integers(0, 2, size=401).astype(np.int8)
        params = rng.random(4)
        jitted = _kernels.gen_path(u, modes, *params, 0)
        plain = _kernels._gen_path_py(u, modes, *params, 0)
        assert np.array_equal(jitted, plain)


@pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="numba path disabled")
def test_step_population_loop_matches_numpy(rng):
    n = 257
    for _ in range(10):
        mode = rng.integers(0, 2, n).astype(np.int8)
        gen = rng.integers(0, 2, n).astype(np.int8)
        u_mode, u_gen = rng.random(n), rng.random(n)
        params = [rng.random(n) for _ in range(6)]
        out_a = np.empty(n, np.int8), np.empty(n, np.int8)
        out_b = np.empty(n, np.int8), np.empty(n, np.int8)
        _kernels.step_population(mode, gen, u_mode, u_gen, *params, *out_a)
        _kernels._step_population_np(mode, gen, u_mode, u_gen, *params, *out_b)
        assert np.array_equal(out_a[0], out_b[0])
        assert np.array_equal(out_a[1], out_b[1])


@pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="numba path disabled")
def test_sic_first_failure_matches_python(rng):
    for _ in range(200):
        n = int(rng.integers(0, 6))
        rp = np.sort(rng.random(n))[::-1].copy()
        noise = float(rng.uniform(0.01, 0.5))
        gamma = float(rng.uniform(0.5, 2.0))
        assert (_kernels.sic_first_failure(rp, noise, gamma)
                == _kernels._sic_first_failure_py(rp, noise, gamma))


def test_empty_population_step():
    empty_i8 = np.empty(0, np.int8)
    empty_f = np.empty(0, np.float64)
    out_m, out_g = np.empty(0, np.int8), np.empty(0, np.int8)
    _kernels.step_population(empty_i8, empty_i8, empty_f, empty_f, empty_f,
                             empty_f, empty_f, empty_f, empty_f, empty_f,
                             out_m, out_g)
    assert out_m.size == 0
