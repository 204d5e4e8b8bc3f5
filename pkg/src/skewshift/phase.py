"""Exact skew-shift orbit arithmetic on the two-torus.

Torus coordinates are unsigned 64-bit fixed-point fractions: the integer
``frac`` stands for ``frac * 2**-64`` in [0, 1). Addition wraps mod 2**64, so
orbits are exact and platform independent. Potentials use the convention

    v_n(x, y) = 2 cos(2 pi (C(n,2) omega + n y + x))

with every phase taken mod 1. The only rounding in a phase is the 2**-64
rounding of omega itself, which displaces phase n by at most C(n,2) * 2**-64
(below 2e-10 for n <= 60,000).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from ._trig import cos_turn

MOD = 1 << 64
MASK = MOD - 1
HALF_TURN = 1 << 63
MAX_INDEX = 1 << 32
_TURN = 2.0**-64


def _to_frac(value) -> int:
    """Round a real (float, Fraction, int, decimal str) to the nearest 2**-64 and wrap."""
    if isinstance(value, str):
        value = Fraction(value)
    q = Fraction(value) * MOD
    # round half up; ties are irrelevant at this resolution
    return math.floor(q + Fraction(1, 2)) & MASK


@dataclass(frozen=True, order=True)
class TorusCoordinate:
    """A point of R/Z stored as ``frac * 2**-64``."""

    frac: int

    def __post_init__(self):
        if not 0 <= self.frac < MOD:
            object.__setattr__(self, "frac", self.frac & MASK)

    @classmethod
    def from_real(cls, value) -> "TorusCoordinate":
        return cls(_to_frac(value))

    def __add__(self, other: "TorusCoordinate") -> "TorusCoordinate":
        return TorusCoordinate((self.frac + other.frac) & MASK)

    def __sub__(self, other: "TorusCoordinate") -> "TorusCoordinate":
        return TorusCoordinate((self.frac - other.frac) & MASK)

    def __float__(self) -> float:
        return self.frac * _TURN

    def shifted_half(self) -> "TorusCoordinate":
        return TorusCoordinate((self.frac + HALF_TURN) & MASK)


@dataclass(frozen=True)
class TorusPoint:
    x: TorusCoordinate
    y: TorusCoordinate

    @classmethod
    def from_reals(cls, x, y) -> "TorusPoint":
        return cls(TorusCoordinate.from_real(x), TorusCoordinate.from_real(y))

    def as_floats(self) -> tuple[float, float]:
        return float(self.x), float(self.y)


@dataclass(frozen=True)
class FrequencyOmega:
    frac: TorusCoordinate
    real_value: float

    @classmethod
    def from_real(cls, value) -> "FrequencyOmega":
        return cls(TorusCoordinate.from_real(value), float(value) % 1.0)

    @classmethod
    def from_fraction_int(cls, frac: int) -> "FrequencyOmega":
        coord = TorusCoordinate(frac)
        return cls(coord, float(coord))


def golden_mean() -> FrequencyOmega:
    """omega = (sqrt(5) - 1)/2 rounded to the nearest multiple of 2**-64."""
    # floor((sqrt5 - 1)/2 * 2**128), then round to 64 fractional bits
    g128 = (isqrt(5 << 256) - (1 << 128)) >> 1
    frac = (g128 + (1 << 63)) >> 64
    return FrequencyOmega(TorusCoordinate(frac), (math.sqrt(5.0) - 1.0) / 2.0)


def skew_shift_step(p: TorusPoint, omega: FrequencyOmega) -> TorusPoint:
    """T(x, y) = (x + y, y + omega) mod 1."""
    return TorusPoint(p.x + p.y, p.y + omega.frac)


def skew_shift_power(p: TorusPoint, n: int, omega: FrequencyOmega) -> TorusPoint:
    """T^n(p) = (x + n y + C(n,2) omega, y + n omega) mod 1, in closed form."""
    if n < 0:
        raise ValueError("negative iterate")
    x = (p.x.frac + n * p.y.frac + (n * (n - 1) // 2) * omega.frac.frac) & MASK
    y = (p.y.frac + n * omega.frac.frac) & MASK
    return TorusPoint(TorusCoordinate(x), TorusCoordinate(y))


def phase_at(n: int, p: TorusPoint, omega: FrequencyOmega) -> TorusCoordinate:
    """C(n,2) omega + n y + x mod 1, the x-coordinate of T^n(p)."""
    if n < 0 or n > MAX_INDEX:
        raise ValueError(f"phase index must lie in [0, 2**32], got {n}")
    total = (n * (n - 1) // 2) * omega.frac.frac + n * p.y.frac + p.x.frac
    return TorusCoordinate(total & MASK)


def potential(n: int, p: TorusPoint, omega: FrequencyOmega) -> float:
    """v_n(p) in [-2, 2]."""
    if n < 1:
        raise ValueError("potentials are indexed from n = 1")
    return 2.0 * cos_turn(phase_at(n, p, omega).frac)


def potential_sequence(p: TorusPoint, omega: FrequencyOmega, n: int, backend=None) -> np.ndarray:
    """Array of v_1, ..., v_n."""
    from . import _backend

    if n > MAX_INDEX:
        raise ValueError("orbit length exceeds 2**32")
    return _backend.get(backend).potential_sequence(p.x.frac, p.y.frac, omega.frac.frac, int(n))
