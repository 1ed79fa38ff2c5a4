"""Adaptive detector units.

A detector is a two-stage machine.  The first stage is a deterministic
learning machine (DLM) whose internal vector ``p`` is a running, weighted
average of the received messages:

* ``I``:   ``p <- gamma*p + (1-gamma)*e``
* ``II``:  ``mu = gamma*(1-w)``, ``p' = mu*p + (1-mu)*e``,
  ``w <- kappa*w + (1-kappa)*|p' - p|/2``
* ``III``: as ``II`` but ``w`` tracks ``|p' - e|/2``

The second stage turns ``|p|**2`` into a click, either by comparing with a
uniform random number (variant ``a``) or with a one-variable deterministic
machine (variant ``b``).  Detectors never exchange information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from numba import njit

from .core import ConfigurationError, InvalidArgument, Message
from .optics import Arrival
from .rng import RngStream, next_double


class DlmKind(str, Enum):
    I = "I"
    II = "II"
    III = "III"

    @property
    def code(self) -> int:
        return {"I": 1, "II": 2, "III": 3}[self.value]


class ClickKind(str, Enum):
    RANDOM = "a"
    DETERMINISTIC = "b"

    @property
    def code(self) -> int:
        return 0 if self is ClickKind.RANDOM else 1


@dataclass(frozen=True)
class DlmVariant:
    kind: DlmKind = DlmKind.I
    gamma: float = 0.999
    kappa: float = 0.9
    w0: float = 0.9
    p0: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "kind", DlmKind(self.kind))
        object.__setattr__(self, "p0", (float(self.p0[0]), float(self.p0[1])))
        if not 0 < self.gamma < 1:
            raise InvalidArgument("gamma must lie in (0, 1)")
        if self.kind is not DlmKind.I:
            if not 0 < self.kappa < 1:
                raise InvalidArgument("kappa must lie in (0, 1)")
            if not 0 <= self.w0 <= 1:
                raise InvalidArgument("w0 must lie in [0, 1]")
        if math.hypot(*self.p0) > 1.0:
            raise InvalidArgument("initial internal vector must have norm <= 1")

    @property
    def initial_w(self) -> float:
        return self.w0 if self.kind is not DlmKind.I else 0.0


@dataclass(frozen=True)
class ClickVariant:
    kind: ClickKind = ClickKind.RANDOM
    nu: float = 0.99
    z0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ClickKind(self.kind))
        if self.kind is ClickKind.DETERMINISTIC and not 0 < self.nu < 1:
            raise InvalidArgument("nu must lie in (0, 1)")
        if not 0 <= self.z0 <= 1:
            raise InvalidArgument("z0 must lie in [0, 1]")


@dataclass(frozen=True)
class DetectorModel:
    """A first stage paired with a click generator, e.g. ``Ia`` or ``IIIb``."""

    dlm: DlmVariant = field(default_factory=DlmVariant)
    click: ClickVariant = field(default_factory=ClickVariant)

    @property
    def label(self) -> str:
        return f"{self.dlm.kind.value}{self.click.kind.value}"

    def params(self) -> np.ndarray:
        return np.array(
            [self.dlm.kind.code, self.dlm.gamma, self.dlm.kappa, self.click.kind.code, self.click.nu],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class DetectorState:
    p: tuple[float, float] = (0.0, 0.0)
    w: float = 0.0
    z: float = 0.0
    clicks: int = 0
    received: int = 0

    @classmethod
    def initial(cls, model: DetectorModel) -> DetectorState:
        return cls(p=model.dlm.p0, w=model.dlm.initial_w, z=model.click.z0)

    @property
    def psq(self) -> float:
        return self.p[0] * self.p[0] + self.p[1] * self.p[1]


@njit(cache=True)
def dlm_step(kind, gamma, kappa, p0, p1, w, e0, e1):
    mu = gamma if kind == 1 else gamma * (1.0 - w)
    q0 = mu * p0 + (1.0 - mu) * e0
    q1 = mu * p1 + (1.0 - mu) * e1
    if kind == 2:
        w = kappa * w + (1.0 - kappa) * math.sqrt((q0 - p0) ** 2 + (q1 - p1) ** 2) / 2.0
    elif kind == 3:
        w = kappa * w + (1.0 - kappa) * math.sqrt((q0 - e0) ** 2 + (q1 - e1) ** 2) / 2.0
    return q0, q1, w


@njit(cache=True)
def click_deterministic_nb(z, psq, nu):
    if abs(psq - nu * z) < abs(psq - nu * z - 1.0 + nu):
        return 0, nu * z
    return 1, nu * z + (1.0 - nu)


@njit(cache=True)
def detector_step(model, s, i, e0, e1, P0, P1, W, Z, CL, RC):
    """Feed one message to detector ``i``; return ``(S, |p|**2)``.

    Consumes one uniform from ``s`` only for the random click generator.
    """
    q0, q1, w = dlm_step(int(model[0]), model[1], model[2], P0[i], P1[i], W[i], e0, e1)
    P0[i] = q0
    P1[i] = q1
    W[i] = w
    psq = q0 * q0 + q1 * q1
    if int(model[3]) == 0:
        hit = 1 if psq >= next_double(s) else 0
    else:
        hit, zn = click_deterministic_nb(Z[i], psq, model[4])
        Z[i] = zn
    RC[i] += 1
    CL[i] += hit
    return hit, psq


def _check_message(e) -> tuple[float, float]:
    e0, e1 = (float(v) for v in e)
    if abs(e0 * e0 + e1 * e1 - 1.0) > 1e-12:
        raise InvalidArgument(f"message ({e0}, {e1}) is not a unit vector")
    return e0, e1


def dlm_update(state: DetectorState, e: Message | Sequence[float], variant: DlmVariant) -> DetectorState:
    e0, e1 = _check_message(e)
    q0, q1, w = dlm_step(variant.kind.code, variant.gamma, variant.kappa, state.p[0], state.p[1], state.w, e0, e1)
    return DetectorState(p=(q0, q1), w=w, z=state.z, clicks=state.clicks, received=state.received + 1)


def click_random(p: Sequence[float], rng: RngStream) -> int:
    """Threshold ``|p|**2`` against one uniform; fires on equality."""
    psq = p[0] * p[0] + p[1] * p[1]
    return 1 if psq >= rng.random() else 0


def click_deterministic(z: float, psq: float, nu: float) -> tuple[int, float]:
    if not (0.0 <= z <= 1.0 and 0.0 <= psq <= 1.0 + 1e-12):
        raise InvalidArgument("click_deterministic needs z and psq in [0, 1]")
    return click_deterministic_nb(float(z), float(psq), float(nu))


class OutcomeKind(str, Enum):
    CLICK = "click"
    NO_CLICK = "no_click"
    MISS = "miss"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    index: int | None = None


class DetectorArray:
    """Non-communicating detectors, each owning a half-open window.

    Windows are given as ``(low, high)`` pairs in screen coordinates and must
    be disjoint.  ``strip`` optionally limits acceptance to arrivals with
    ``|elevation| <= strip`` (spherical screens).
    """

    def __init__(self, windows, model: DetectorModel, strip: float | None = None):
        win = np.asarray(windows, dtype=np.float64).reshape(-1, 2)
        if len(win) == 0:
            raise ConfigurationError("a detector array needs at least one window")
        if np.any(win[:, 1] <= win[:, 0]):
            raise ConfigurationError("every window needs low < high")
        order = np.argsort(win[:, 0], kind="stable")
        if np.any(order != np.arange(len(win))):
            raise ConfigurationError("windows must be listed in increasing order")
        if np.any(win[1:, 0] < win[:-1, 1]):
            raise ConfigurationError("detector windows overlap")
        self.lo = np.ascontiguousarray(win[:, 0])
        self.hi = np.ascontiguousarray(win[:, 1])
        self.model = model
        self.strip = strip
        n = len(win)
        self.p0 = np.full(n, model.dlm.p0[0])
        self.p1 = np.full(n, model.dlm.p0[1])
        self.w = np.full(n, model.dlm.initial_w)
        self.z = np.full(n, model.click.z0)
        self.clicks = np.zeros(n, dtype=np.int64)
        self.received = np.zeros(n, dtype=np.int64)

    @classmethod
    def uniform(cls, count: int, low: float, high: float, model: DetectorModel, strip: float | None = None):
        edges = np.linspace(low, high, count + 1)
        return cls(np.column_stack([edges[:-1], edges[1:]]), model, strip)

    def __len__(self) -> int:
        return len(self.lo)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def state(self, i: int) -> DetectorState:
        return DetectorState(
            p=(float(self.p0[i]), float(self.p1[i])),
            w=float(self.w[i]),
            z=float(self.z[i]),
            clicks=int(self.clicks[i]),
            received=int(self.received[i]),
        )

    def locate(self, arrival: Arrival) -> int | None:
        if self.strip is not None and abs(arrival.elevation) > self.strip:
            return None
        i = int(np.searchsorted(self.lo, arrival.position, side="right")) - 1
        if i >= 0 and arrival.position < self.hi[i]:
            return i
        return None

    def arrays(self):
        return self.p0, self.p1, self.w, self.z, self.clicks, self.received


def array_process(
    array: DetectorArray,
    arrival: Arrival,
    message: Message | Sequence[float],
    rng: RngStream,
) -> Outcome:
    """Route one message to the detector whose window holds the arrival."""
    e0, e1 = _check_message(message)
    i = array.locate(arrival)
    if i is None:
        return Outcome(OutcomeKind.MISS)
    hit, _ = detector_step(array.model.params(), rng.state, i, e0, e1, *array.arrays())
    return Outcome(OutcomeKind.CLICK if hit else OutcomeKind.NO_CLICK, i)
