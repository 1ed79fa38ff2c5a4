"""Emission of messengers from the line, Gaussian and disc sources.

Every emission consumes a fixed number of uniforms from the stream, position
draws first and angle draws second:

============== ========== =====================================
kind           position   angle
============== ========== =====================================
double_slit    1          1
gaussian_pair  3          1
circular_pair  3          2  (uniform over solid angle)
gaussian_line  2          1
point          0          1
============== ========== =====================================

Gaussian deviates use the cosine branch of Box-Muller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

from .core import InvalidArgument, Messenger, TWO_PI
from .rng import RngStream, next_double

HALF_PI = 0.5 * math.pi


class SourceKind(str, Enum):
    DOUBLE_SLIT = "double_slit"
    GAUSSIAN_PAIR = "gaussian_pair"
    CIRCULAR_PAIR = "circular_pair"
    GAUSSIAN_LINE = "gaussian_line"
    POINT = "point"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]

    @property
    def dimension(self) -> int:
        return 3 if self is SourceKind.CIRCULAR_PAIR else 2


_KIND_CODES = {
    SourceKind.DOUBLE_SLIT: 0,
    SourceKind.GAUSSIAN_PAIR: 1,
    SourceKind.CIRCULAR_PAIR: 2,
    SourceKind.GAUSSIAN_LINE: 3,
    SourceKind.POINT: 4,
}


@dataclass(frozen=True)
class SourceSpec:
    """Current distribution and angular range of a source.

    ``a`` is the slit width, or the disc diameter for ``circular_pair`` (the
    disc indicator is ``(y -+ d/2)**2 + z**2 <= a**2/4``).  ``beta_range`` is
    the half-open emission interval; for ``circular_pair`` its largest
    magnitude is the half-angle of the emission cone around +x.  ``None``
    selects the default ``[-pi/2, pi/2)``.
    """

    kind: SourceKind
    a: float = 0.0
    d: float = 0.0
    sigma: float = 0.0
    beta_range: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind(self.kind))
        self.validate()

    def validate(self) -> None:
        k = self.kind
        if k in (SourceKind.DOUBLE_SLIT, SourceKind.CIRCULAR_PAIR):
            if not self.a > 0:
                raise InvalidArgument(f"{k.value}: aperture a must be positive")
            if not self.d > self.a:
                raise InvalidArgument(f"{k.value}: separation d must exceed a")
        if k is SourceKind.GAUSSIAN_PAIR and not self.d >= 0:
            raise InvalidArgument("gaussian_pair: separation d must be non-negative")
        if k in (SourceKind.GAUSSIAN_PAIR, SourceKind.GAUSSIAN_LINE) and not self.sigma > 0:
            raise InvalidArgument(f"{k.value}: sigma must be positive")
        lo, hi = self.angles
        if not (-HALF_PI <= lo < hi <= HALF_PI):
            raise InvalidArgument(f"beta_range {self.beta_range} must lie within [-pi/2, pi/2]")

    @property
    def angles(self) -> tuple[float, float]:
        if self.beta_range is None:
            return (-HALF_PI, HALF_PI)
        return (float(self.beta_range[0]), float(self.beta_range[1]))

    @property
    def cone_cos(self) -> float:
        lo, hi = self.angles
        return math.cos(max(abs(lo), abs(hi)))

    def params(self) -> np.ndarray:
        """Flat parameter vector consumed by the compiled samplers."""
        lo, hi = self.angles
        return np.array(
            [self.kind.code, self.a, self.d, self.sigma, lo, hi, self.cone_cos],
            dtype=np.float64,
        )


@njit(cache=True)
def _normal(s):
    u1 = next_double(s)
    u2 = next_double(s)
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(TWO_PI * u2)


@njit(cache=True)
def sample_position_nb(s, kind, a, d, sigma):
    """Return ``(y, z)`` of the emission point; ``x`` is always 0."""
    if kind == 0:
        u = 2.0 * next_double(s)
        if u < 1.0:
            return -0.5 * d + a * (u - 0.5), 0.0
        return 0.5 * d + a * (u - 1.5), 0.0
    if kind == 1:
        centre = -0.5 * d if next_double(s) < 0.5 else 0.5 * d
        return centre + sigma * _normal(s), 0.0
    if kind == 2:
        centre = -0.5 * d if next_double(s) < 0.5 else 0.5 * d
        r = 0.5 * a * math.sqrt(next_double(s))
        ang = TWO_PI * next_double(s)
        return centre + r * math.cos(ang), r * math.sin(ang)
    if kind == 3:
        return sigma * _normal(s), 0.0
    return 0.0, 0.0


@njit(cache=True)
def sample_positions_nb(s, kind, a, d, sigma, n):
    out = np.empty((n, 2))
    for j in range(n):
        y, z = sample_position_nb(s, kind, a, d, sigma)
        out[j, 0] = y
        out[j, 1] = z
    return out


@njit(cache=True)
def sample_angle_nb(s, kind, lo, hi, cone_cos):
    """Return ``(beta, dx, dy, dz)``; the direction is only set in 3D."""
    if kind == 2:
        cos_psi = 1.0 - next_double(s) * (1.0 - cone_cos)
        sin_psi = math.sqrt(max(0.0, 1.0 - cos_psi * cos_psi))
        az = TWO_PI * next_double(s)
        return math.acos(cos_psi), cos_psi, sin_psi * math.cos(az), sin_psi * math.sin(az)
    return lo + (hi - lo) * next_double(s), 0.0, 0.0, 0.0


@njit(cache=True)
def emit_nb(s, src):
    kind = int(src[0])
    y, z = sample_position_nb(s, kind, src[1], src[2], src[3])
    beta, dx, dy, dz = sample_angle_nb(s, kind, src[4], src[5], src[6])
    return y, z, beta, dx, dy, dz


def sample_position(spec: SourceSpec, rng: RngStream) -> tuple[float, ...]:
    y, z = sample_position_nb(rng.state, spec.kind.code, spec.a, spec.d, spec.sigma)
    if spec.kind.dimension == 3:
        return (0.0, y, z)
    return (0.0, y)


def sample_angle(spec: SourceSpec, rng: RngStream) -> float | tuple[float, float, float]:
    lo, hi = spec.angles
    beta, dx, dy, dz = sample_angle_nb(rng.state, spec.kind.code, lo, hi, spec.cone_cos)
    if spec.kind.dimension == 3:
        return (dx, dy, dz)
    return beta


def emit(spec: SourceSpec, rng: RngStream, frequency: float) -> Messenger:
    """Create the next messenger with its clock at zero."""
    origin = sample_position(spec, rng)
    beta = sample_angle(spec, rng)
    return Messenger(origin=origin, beta=beta, frequency=frequency)
