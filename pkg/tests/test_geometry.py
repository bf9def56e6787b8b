"""Geometry and channel model tests, frozen against direct formula evaluation."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from nomagrant.geometry import (ChannelConstants, LinkGain,
                                LITERAL_PATHLOSS_COEFFICIENT, Position, link_gain,
                                path_gain, received_power, sample_fading, sample_ppp)

C4 = ChannelConstants(wavelength=0.125, antenna_gain_product=1.0)
C5 = ChannelConstants(wavelength=0.125, antenna_gain_product=1.0,
                      pathloss_coefficient=LITERAL_PATHLOSS_COEFFICIENT)


def test_zero_density_yields_empty(rng):
    assert sample_ppp(0.0, 500.0, rng) == []


def test_ppp_mean_count_matches_poisson_mean():
    rng = np.random.default_rng(2024)
    trials = 10_000
    counts = [len(sample_ppp(1e-4, 500.0, rng)) for _ in range(trials)]
    expected = 1e-4 * math.pi * 500.0 ** 2
    assert abs(np.mean(counts) - expected) / expected < 0.01


def test_ppp_disc_confinement(rng):
    for p in sample_ppp(1e-4, 500.0, rng):
        assert p.x ** 2 + p.y ** 2 <= 500.0 ** 2 + 1e-9


def test_ppp_same_seed_bit_identical():
    a = sample_ppp(1e-4, 500.0, np.random.default_rng(99))
    b = sample_ppp(1e-4, 500.0, np.random.default_rng(99))
    assert a == b


def test_ppp_quadrant_counts_uniform_chi_square():
    # counts pooled over many seeded deployments; 1% significance, 3 dof
    rng = np.random.default_rng(777)
    quadrants = np.zeros(4, dtype=np.int64)
    for _ in range(10_000):
        for p in sample_ppp(1e-4, 500.0, rng):
            quadrants[(p.x < 0) * 2 + (p.y < 0)] += 1
    _, p_value = stats.chisquare(quadrants)
    assert p_value > 0.01


def test_ppp_invalid_args(rng):
    with pytest.raises(ValueError):
        sample_ppp(-1e-4, 500.0, rng)
    with pytest.raises(ValueError):
        sample_ppp(1e-4, 0.0, rng)


def test_path_gain_standard_coefficient():
    assert math.isclose(path_gain(100.0, C4), 0.125 / (4 * math.pi * 100.0))


def test_path_gain_literal_coefficient():
    assert math.isclose(path_gain(100.0, C5), 0.125 / (5 * math.pi * 100.0))


def test_path_gain_inverse_distance_law():
    # powers of two make the halving exact in floating point
    assert path_gain(256.0, C4) == path_gain(128.0, C4) / 2.0
    assert math.isclose(path_gain(2 * 333.0, C4), path_gain(333.0, C4) / 2.0)


def test_path_gain_monotone_decreasing():
    distances = np.linspace(0.2, 900.0, 200)
    gains = [path_gain(float(d), C4) for d in distances]
    assert all(b < a for a, b in zip(gains, gains[1:]))


def test_path_gain_scales_linearly_with_wavelength():
    doubled = ChannelConstants(wavelength=0.25, antenna_gain_product=1.0)
    assert math.isclose(path_gain(100.0, doubled), 2.0 * path_gain(100.0, C4))


def test_path_gain_zero_distance_rejected():
    with pytest.raises(ValueError):
        path_gain(0.0, C4)


def test_path_gain_clamped_below_wavelength():
    assert path_gain(0.01, C4) == path_gain(C4.wavelength, C4)
    assert path_gain(0.01, C4) <= 1.0


def test_fading_second_moment():
    rng = np.random.default_rng(5)
    draws = np.array([sample_fading(rng, 1.0) for _ in range(100_000)])
    assert abs(np.mean(np.abs(draws) ** 2) - 1.0) < 0.02
    assert abs(np.mean(draws.real)) < 0.01


def test_fading_zero_variance(rng):
    assert sample_fading(rng, 0.0) == 0j


def test_received_power_examples():
    gain = LinkGain(fading=1 + 0j, path_gain=1.0, composite=0.5 + 0j)
    assert received_power(0.0, gain) == 0.0
    assert math.isclose(received_power(2.0, gain), 0.5)
    unit = LinkGain(fading=1 + 0j, path_gain=1.0, composite=1 + 0j)
    assert received_power(1.0, unit) == 1.0


def test_received_power_phase_invariant():
    for theta in (0.3, 1.2, 2.9):
        rotated = 0.7 * complex(math.cos(theta), math.sin(theta))
        gain = LinkGain(fading=rotated, path_gain=1.0, composite=rotated)
        assert math.isclose(received_power(3.0, gain), 3.0 * 0.49, rel_tol=1e-12)


def test_link_gain_compositions():
    g = 0.6 + 0.8j
    multiplied = link_gain(g, 0.5, C4)
    assert multiplied.composite == g * 0.5
    divided = link_gain(g, 0.5, ChannelConstants(composition="division"))
    assert divided.composite == g / 0.5
    assert math.isclose(abs(multiplied.composite), abs(g) * 0.5)


def test_channel_constants_validation():
    with pytest.raises(ValueError):
        ChannelConstants(wavelength=-1.0)
    with pytest.raises(ValueError):
        ChannelConstants(composition="nonsense")


def test_position_distance():
    assert Position(3.0, 4.0).distance == 5.0
