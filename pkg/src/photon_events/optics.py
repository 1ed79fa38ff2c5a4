"""Geometric-optics propagation from the source plane to the detection surface.

Positions on the screen are angles (radians) for the circular and spherical
screens and ``y`` coordinates (meters) for the flat screen behind a pair of
line sources or a Fresnel biprism.  No small-angle approximations are made.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

from .core import C_LIGHT, GeometryViolation, InvalidArgument, Messenger, TotalInternalReflection

OK = 0
MISS = 1
TIR = 2


class GeometryKind(str, Enum):
    CIRCULAR = "circular"
    FLAT = "flat"
    SPHERICAL = "spherical"
    BIPRISM = "biprism"

    @property
    def code(self) -> int:
        return _GEOMETRY_CODES[self]

    @property
    def angular(self) -> bool:
        return self in (GeometryKind.CIRCULAR, GeometryKind.SPHERICAL)


_GEOMETRY_CODES = {
    GeometryKind.CIRCULAR: 0,
    GeometryKind.FLAT: 1,
    GeometryKind.SPHERICAL: 2,
    GeometryKind.BIPRISM: 3,
}


@dataclass(frozen=True)
class GeometrySpec:
    """Detection surface and, for the biprism, the refracting element.

    ``X`` is the source-screen distance (flat, biprism) or the screen radius
    (circular, spherical).  ``strip`` is the angular half-height of the band
    of the spherical screen, around the plane ``z = 0``, that carries
    detectors.
    """

    kind: GeometryKind
    X: float
    Xprime: float = 0.0
    alpha: float = 0.0
    n_refr: float = 1.0
    strip: float = math.radians(1.0)

    def __post_init__(self):
        object.__setattr__(self, "kind", GeometryKind(self.kind))
        if not self.X > 0:
            raise InvalidArgument("screen distance X must be positive")
        if self.kind is GeometryKind.BIPRISM:
            if not 0 < self.Xprime < self.X:
                raise InvalidArgument("biprism apex must satisfy 0 < X' < X")
            if not 0 < self.alpha < 0.5 * math.pi:
                raise InvalidArgument("biprism summit angle must be in (0, pi/2)")
            if not self.n_refr > 1:
                raise InvalidArgument("biprism refractive index must exceed 1")
        if self.kind is GeometryKind.SPHERICAL and not 0 < self.strip <= 0.5 * math.pi:
            raise InvalidArgument("strip half-height must be in (0, pi/2]")

    def params(self) -> np.ndarray:
        return np.array(
            [self.kind.code, self.X, self.Xprime, self.alpha, self.n_refr, self.strip],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class Arrival:
    position: float
    tof: float
    elevation: float = 0.0


@njit(cache=True)
def circular_nb(y, beta, X):
    z = y / X
    if not abs(z) < 1.0:
        return MISS, 0.0, 0.0
    cb = math.cos(beta)
    sb = math.sin(beta)
    root = math.sqrt(1.0 - z * z * cb * cb)
    st = z * cb * cb + sb * root
    st = min(1.0, max(-1.0, st))
    s = X * (root - z * sb)
    return OK, math.asin(st), s / C_LIGHT


@njit(cache=True)
def flat_nb(y, beta, X):
    if not abs(beta) < 0.5 * math.pi:
        return MISS, 0.0, 0.0
    return OK, X * math.tan(beta) + y, X / math.cos(beta) / C_LIGHT


@njit(cache=True)
def spherical_nb(y, z, dx, dy, dz, X):
    if not dx > 0.0:
        return MISS, 0.0, 0.0, 0.0
    b = y * dy + z * dz
    c = y * y + z * z - X * X
    if not c < 0.0:
        return MISS, 0.0, 0.0, 0.0
    t = -b + math.sqrt(b * b - c)
    hx = t * dx
    hy = y + t * dy
    hz = z + t * dz
    el = math.asin(min(1.0, max(-1.0, hz / X)))
    return OK, math.atan2(hy, hx), el, t / C_LIGHT


@njit(cache=True)
def biprism_nb(y, beta, X, Xp, alpha, n):
    ta = math.tan(0.5 * alpha)
    tb = math.tan(beta)
    num = y + Xp * tb
    den_up = 1.0 + tb * ta
    den_dn = 1.0 - tb * ta
    # the apex ray (num == 0) satisfies both branches and is sent up
    upper = den_up > 0.0 and num >= 0.0
    if not upper and not (den_dn > 0.0 and num <= 0.0):
        return MISS, 0.0, 0.0
    if upper:
        xe = (Xp - y * ta) / den_up
        ye = num / den_up
        arg = n * math.sin(beta - 0.5 * alpha)
    else:
        xe = (Xp + y * ta) / den_dn
        ye = num / den_dn
        arg = n * math.sin(beta + 0.5 * alpha)
    if xe < 0.0:
        return MISS, 0.0, 0.0
    if abs(arg) > 1.0:
        return TIR, 0.0, 0.0
    if upper:
        bp = 0.5 * alpha + math.asin(arg)
    else:
        bp = -0.5 * alpha + math.asin(arg)
    if not abs(bp) < 0.5 * math.pi:
        return MISS, 0.0, 0.0
    land = ye + (X - xe) * math.tan(bp)
    t = (n * xe / math.cos(beta) + (X - xe) / math.cos(bp)) / C_LIGHT
    return OK, land, t


@njit(cache=True)
def propagate_nb(geo, y, z, beta, dx, dy, dz):
    """Dispatch on ``geo[0]``; return ``(status, position, elevation, tof)``."""
    kind = int(geo[0])
    if kind == 0:
        st, pos, t = circular_nb(y, beta, geo[1])
        return st, pos, 0.0, t
    if kind == 1:
        st, pos, t = flat_nb(y, beta, geo[1])
        return st, pos, 0.0, t
    if kind == 2:
        return spherical_nb(y, z, dx, dy, dz, geo[1])
    st, pos, t = biprism_nb(y, beta, geo[1], geo[2], geo[3], geo[4])
    return st, pos, 0.0, t


def _raise_for(status: int, what: str) -> None:
    if status == TIR:
        raise TotalInternalReflection(f"{what}: total internal reflection at the prism face")
    if status != OK:
        raise GeometryViolation(f"{what}: ray does not reach the screen")


def propagate_circular(y: float, beta: float, X: float) -> Arrival:
    st, theta, tof = circular_nb(float(y), float(beta), float(X))
    _raise_for(st, f"circular screen (y={y}, X={X})")
    return Arrival(theta, tof)


def propagate_flat(y: float, beta: float, X: float) -> Arrival:
    st, yp, tof = flat_nb(float(y), float(beta), float(X))
    _raise_for(st, f"flat screen (beta={beta})")
    return Arrival(yp, tof)


def propagate_spherical(origin, direction, X: float) -> Arrival:
    y, z = float(origin[0]), float(origin[1])
    dx, dy, dz = (float(v) for v in direction)
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    if abs(norm - 1.0) > 1e-12:
        raise InvalidArgument("direction must be a unit vector")
    st, theta, el, tof = spherical_nb(y, z, dx, dy, dz, float(X))
    _raise_for(st, "spherical screen")
    return Arrival(theta, tof, el)


def propagate_biprism(y: float, beta: float, spec: GeometrySpec) -> Arrival:
    if abs(beta) > 0.5 * spec.alpha:
        raise InvalidArgument("biprism rays must satisfy |beta| <= alpha/2")
    st, yp, tof = biprism_nb(float(y), float(beta), spec.X, spec.Xprime, spec.alpha, spec.n_refr)
    _raise_for(st, f"biprism (y={y}, beta={beta})")
    return Arrival(yp, tof)


def propagate(messenger: Messenger, geometry: GeometrySpec) -> Arrival:
    """Carry ``messenger`` to the screen of ``geometry``."""
    kind = geometry.kind
    if kind is GeometryKind.SPHERICAL:
        if messenger.dimension != 3:
            raise InvalidArgument("spherical screens need three-dimensional messengers")
        return propagate_spherical(messenger.origin[1:], messenger.beta, geometry.X)
    if messenger.dimension != 2:
        raise InvalidArgument(f"{kind.value} screens need planar messengers")
    y = messenger.origin[1]
    if kind is GeometryKind.CIRCULAR:
        return propagate_circular(y, messenger.beta, geometry.X)
    if kind is GeometryKind.FLAT:
        return propagate_flat(y, messenger.beta, geometry.X)
    return propagate_biprism(y, messenger.beta, geometry)
