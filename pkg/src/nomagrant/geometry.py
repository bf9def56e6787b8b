"""Cell geometry and free-space channel model.

MTDs are dropped on a disc around the base station by a homogeneous Poisson
point process; each link combines a deterministic free-space path gain with a
Rayleigh (circularly symmetric complex Gaussian) fading draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator

STANDARD_PATHLOSS_COEFFICIENT = 4.0 * math.pi
# Some free-space formulations use 5*pi in the denominator; kept selectable.
LITERAL_PATHLOSS_COEFFICIENT = 5.0 * math.pi

COMPOSITION_MULTIPLICATIVE = "multiplicative"
COMPOSITION_DIVISION = "division"
_COMPOSITIONS = (COMPOSITION_MULTIPLICATIVE, COMPOSITION_DIVISION)


@dataclass(frozen=True)
class Position:
    """Planar position in meters, origin at the base station."""

    x: float
    y: float

    @property
    def distance(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class ChannelConstants:
    """Free-space channel constants.

    ``pathloss_coefficient`` is the denominator constant c in
    l = wavelength * sqrt(G) / (c * d); 4*pi is the standard Friis amplitude,
    5*pi is the alternative convention.  ``composition`` selects how fading g
    and path gain l combine into the composite amplitude: "multiplicative"
    (h = g * l, attenuating) or "division" (h = g / l, which grows with
    distance since l < 1 — kept only for comparison studies).
    """

    wavelength: float = 0.125
    antenna_gain_product: float = 1.0
    pathloss_coefficient: float = STANDARD_PATHLOSS_COEFFICIENT
    noise_power: float = 1e-15
    composition: str = COMPOSITION_MULTIPLICATIVE

    def __post_init__(self) -> None:
        for name in ("wavelength", "antenna_gain_product", "pathloss_coefficient",
                     "noise_power"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.composition not in _COMPOSITIONS:
            raise ValueError(f"composition must be one of {_COMPOSITIONS}")


@dataclass(frozen=True)
class LinkGain:
    """One link's fading draw, path gain, and composite amplitude."""

    fading: complex
    path_gain: float
    composite: complex = field(default=0j)

    @property
    def amplitude(self) -> float:
        return abs(self.composite)


def sample_ppp(density: float, radius: float, rng: Generator) -> list[Position]:
    """Drop points on the disc of given radius by a homogeneous PPP.

    The point count is Poisson(density * pi * radius^2); positions are
    independent uniform on the disc.
    """
    if density < 0:
        raise ValueError("density must be non-negative")
    if radius <= 0:
        raise ValueError("radius must be positive")
    count = int(rng.poisson(density * math.pi * radius * radius))
    return uniform_disc(count, radius, rng)


def uniform_disc(count: int, radius: float, rng: Generator) -> list[Position]:
    """``count`` independent uniform positions on the disc."""
    radii = radius * np.sqrt(rng.random(count))
    theta = 2.0 * math.pi * rng.random(count)
    return [Position(float(r * math.cos(t)), float(r * math.sin(t)))
            for r, t in zip(radii, theta)]


def path_gain(distance: float, constants: ChannelConstants) -> float:
    """Free-space amplitude path gain wavelength*sqrt(G)/(c*d).

    Distances below one wavelength are clamped to one wavelength so the gain
    never exceeds sqrt(G)/c.  A zero or negative distance is a domain error.
    """
    if distance <= 0:
        raise ValueError("distance must be strictly positive")
    d = max(distance, constants.wavelength)
    return (constants.wavelength * math.sqrt(constants.antenna_gain_product)
            / (constants.pathloss_coefficient * d))


def sample_fading(rng: Generator, variance: float = 1.0) -> complex:
    """Zero-mean circularly symmetric complex Gaussian draw.

    Real and imaginary parts are independent N(0, variance/2), so the
    magnitude is Rayleigh with E[|g|^2] = variance.
    """
    if variance < 0:
        raise ValueError("variance must be non-negative")
    scale = math.sqrt(variance / 2.0)
    re, im = rng.normal(0.0, 1.0, size=2)
    return complex(re * scale, im * scale)


def link_gain(fading: complex, path: float, constants: ChannelConstants) -> LinkGain:
    """Combine a fading draw with a path gain per the configured convention."""
    if constants.composition == COMPOSITION_MULTIPLICATIVE:
        composite = fading * path
    else:
        composite = fading / path
    return LinkGain(fading=fading, path_gain=path, composite=composite)


def received_power(tx_power: float, gain: LinkGain) -> float:
    """Received power p * |h|^2 for transmit power p and composite gain h."""
    if tx_power < 0:
        raise ValueError("tx_power must be non-negative")
    return tx_power * gain.amplitude ** 2
