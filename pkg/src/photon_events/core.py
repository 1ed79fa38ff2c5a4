"""Messengers, messages and phase arithmetic.

SI units throughout: meters, seconds, hertz, radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from numba import njit

from .rng import RngStream  # noqa: F401  re-exported as part of the core surface

C_LIGHT = 299_792_458.0
TWO_PI = 2.0 * math.pi


class InvalidArgument(ValueError):
    pass


class GeometryViolation(ValueError):
    """A ray does not reach the detection surface as the geometry requires.

    ``event`` is the zero-based index of the offending emission inside a run.
    """

    def __init__(self, message: str, event: int | None = None):
        super().__init__(message)
        self.event = event


class TotalInternalReflection(GeometryViolation):
    pass


class ConfigurationError(ValueError):
    """Raised for inconsistent experiment set-ups.

    ``key`` names the offending configuration entry when one is known.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@njit(cache=True)
def _two_prod(a, b):
    # Dekker product: a*b == p + err exactly (no overflow in our range).
    p = a * b
    c = 134217729.0 * a
    ah = c - (c - a)
    al = a - ah
    c = 134217729.0 * b
    bh = c - (c - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@njit(cache=True)
def cycle_fraction(tof, frequency):
    """Fractional part of ``frequency * tof`` carried in double-word precision."""
    p, err = _two_prod(frequency, tof)
    whole = math.floor(p)
    frac = (p - whole) + err
    frac -= math.floor(frac)
    # a tiny negative err can round up to exactly 1.0
    return 0.0 if frac >= 1.0 else frac


@njit(cache=True)
def phase_nb(tof, frequency):
    return TWO_PI * cycle_fraction(tof, frequency)


@njit(cache=True)
def message_nb(tof, frequency):
    phi = TWO_PI * cycle_fraction(tof, frequency)
    return math.cos(phi), math.sin(phi)


@dataclass(frozen=True)
class Message:
    """Clock-hand unit vector ``(cos phi, sin phi)``."""

    e0: float
    e1: float

    def __post_init__(self):
        if abs(self.e0 * self.e0 + self.e1 * self.e1 - 1.0) > 1e-12:
            raise InvalidArgument(f"message ({self.e0}, {self.e1}) is not a unit vector")

    @classmethod
    def from_phase(cls, phi: float) -> Message:
        return cls(math.cos(phi), math.sin(phi))

    def __iter__(self):
        yield self.e0
        yield self.e1


@dataclass(frozen=True)
class Messenger:
    """A particle carrying a phase clock.

    ``beta`` is the emission angle for planar set-ups and a unit direction
    3-vector for the three-dimensional circular sources.
    """

    origin: tuple[float, ...]
    beta: float | tuple[float, float, float]
    frequency: float
    tof: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise InvalidArgument(f"frequency must be positive, got {self.frequency}")
        if not self.tof >= 0:
            raise InvalidArgument(f"time of flight must be non-negative, got {self.tof}")

    @property
    def dimension(self) -> int:
        return len(self.origin)

    def arrived(self, tof: float) -> Messenger:
        return replace(self, tof=tof)

    @property
    def message(self) -> Message:
        return message_from_tof(self.tof, self.frequency)


def _check_tof(tof: float, frequency: float) -> None:
    if not tof >= 0:
        raise InvalidArgument(f"time of flight must be non-negative, got {tof}")
    if not frequency > 0:
        raise InvalidArgument(f"frequency must be positive, got {frequency}")


def reduced_phase(tof: float, frequency: float) -> float:
    """Clock phase ``2*pi*frequency*tof`` reduced to [0, 2*pi)."""
    _check_tof(tof, frequency)
    return phase_nb(float(tof), float(frequency))


def message_from_tof(tof: float, frequency: float) -> Message:
    _check_tof(tof, frequency)
    e0, e1 = message_nb(float(tof), float(frequency))
    return Message(e0, e1)


def wavenumber(wavelength: float) -> float:
    if not wavelength > 0:
        raise InvalidArgument(f"wavelength must be positive, got {wavelength}")
    return TWO_PI / wavelength


def frequency_of(wavelength: float) -> float:
    if not wavelength > 0:
        raise InvalidArgument(f"wavelength must be positive, got {wavelength}")
    return C_LIGHT / wavelength
