from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation before any timed test runs."""
    from nomagrant import _kernels

    u = np.array([0.1, 0.9], dtype=np.float64)
    _kernels.chain_path(u, 0.5, 0.5, 0)
    _kernels.gen_path(u, np.array([0, 1, 0], dtype=np.int8), 0.5, 0.5, 0.5, 0.5, 0)
    out = np.empty(2, dtype=np.int8)
    _kernels.step_population(np.zeros(2, np.int8), np.zeros(2, np.int8), u, u,
                             u, u, u, u, u, u, out, out.copy())
    _kernels.sic_first_failure(u, 0.1, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
