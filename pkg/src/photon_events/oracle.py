"""Wave-theory references for the simulated patterns.

Closed-form far-field intensities are normalized to 1 at the central
maximum.  The Monte Carlo routines estimate the same quantities by summing
unit phasors, either over rays that land in a detector window or over source
points seen from a fixed screen point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import GeometryViolation, InvalidArgument, TWO_PI, frequency_of
from .optics import GeometryKind, GeometrySpec
from .rng import RngStream
from .sources import SourceSpec, sample_positions_nb


@dataclass(frozen=True)
class IntensityProfile:
    positions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        val = np.asarray(self.values, dtype=np.float64)
        if pos.shape != val.shape or pos.ndim != 1:
            raise InvalidArgument("positions and values must be 1-D arrays of equal length")
        if np.any(np.diff(pos) <= 0):
            raise InvalidArgument("positions must be strictly increasing")
        if np.any(val < 0):
            raise InvalidArgument("intensities must be non-negative")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", val)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def peak(self) -> float:
        return float(self.values.max())


# ---------------------------------------------------------------- Bessel J1

_J1_SERIES_LIMIT = 12.0


def _j1_series(x: np.ndarray) -> np.ndarray:
    h = 0.5 * x
    term = h.copy()
    total = h.copy()
    hh = -h * h
    for k in range(1, 60):
        term = term * hh / (k * (k + 1))
        total = total + term
    return total


def _j1_asymptotic(x: np.ndarray) -> np.ndarray:
    # Hankel expansion with mu = 4 nu**2 = 4; stop at the smallest term
    mu = 4.0
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    eight_x = 8.0 * x
    prev = np.full(x.shape, np.inf)
    for k in range(1, 40):
        term = term * (mu - (2 * k - 1) ** 2) / (k * eight_x)
        mag = np.abs(term)
        active &= mag < prev
        prev = np.where(active, mag, prev)
        step = np.where(active, term, 0.0)
        if k % 2 == 1:
            q = q + step * (1.0 if k % 4 == 1 else -1.0)
        else:
            p = p + step * (-1.0 if k % 4 == 2 else 1.0)
        if not active.any():
            break
    chi = x - 0.75 * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(x):
    """Bessel function of the first kind, order one; abs error below 1e-10."""
    arr = np.asarray(x, dtype=np.float64)
    ax = np.abs(arr)
    out = np.empty_like(ax)
    small = ax <= _J1_SERIES_LIMIT
    out[small] = _j1_series(ax[small])
    out[~small] = _j1_asymptotic(ax[~small])
    out = np.where(arr < 0, -out, out)
    return out if out.ndim else float(out)


# ------------------------------------------------------------ closed forms

def _sinc(x: np.ndarray) -> np.ndarray:
    safe = np.where(x == 0.0, 1.0, x)
    return np.where(x == 0.0, 1.0, np.sin(safe) / safe)


def intensity_slit(theta, q: float, a: float, d: float):
    """Two slits of width ``a`` and separation ``d`` seen on a circular screen."""
    s = np.sin(np.asarray(theta, dtype=np.float64))
    val = _sinc(0.5 * q * a * s) ** 2 * np.cos(0.5 * q * d * s) ** 2
    return val if val.ndim else float(val)


def intensity_gaussian(y, q: float, sigma: float, d: float, X: float):
    """Two overlapping Gaussian pencils on a flat screen at distance ``X``.

    Only meaningful for ``d, sigma << X``; a warning is issued when
    ``X < 100 * max(d, sigma)``.
    """
    if X < 100.0 * max(d, sigma):
        warnings.warn(
            f"Gaussian two-beam formula used outside its far-field regime (X={X:g}, d={d:g}, sigma={sigma:g})",
            RuntimeWarning,
            stacklevel=2,
        )
    y = np.asarray(y, dtype=np.float64)
    qs2 = q * sigma * sigma
    b = qs2 * qs2 / (X * X + qs2 * qs2)
    decay = b * (y * y + 0.25 * d * d) / (sigma * sigma)
    grow = b * y * d / (sigma * sigma)
    # cosh(grow) * exp(-decay) without overflowing either factor
    hyper = 0.5 * (np.exp(grow - decay) + np.exp(-grow - decay))
    val = hyper + np.cos((1.0 - b) * q * y * d / X) * np.exp(-decay)
    val = np.maximum(val, 0.0)
    return val if val.ndim else float(val)


def intensity_circular(theta, q: float, a: float, d: float):
    """Two discs of radius ``a`` with centers ``d`` apart, on a spherical screen."""
    s = np.sin(np.asarray(theta, dtype=np.float64))
    u = q * a * s
    safe = np.where(u == 0.0, 1.0, u)
    airy = np.where(u == 0.0, 1.0, 2.0 * bessel_j1(safe) / safe)
    val = airy ** 2 * np.cos(0.5 * q * d * s) ** 2
    return val if val.ndim else float(val)


# ------------------------------------------------------------- Monte Carlo

@dataclass(frozen=True)
class AmplitudeEstimate:
    """Per-window phasor sums from ray arrivals.

    ``intensity`` is ``|mean phasor|**2`` (NaN for windows no ray reached);
    ``weighted`` is ``|sum|**2 / samples``, the same quantity scaled by the
    fraction of rays landing in the window.
    """

    intensity: np.ndarray
    weighted: np.ndarray
    counts: np.ndarray
    samples: int


def amplitude_mc(windows, source: SourceSpec, geometry: GeometrySpec, samples: int,
                 rng: RngStream, wavelength: float) -> AmplitudeEstimate:
    """Propagate ``samples`` rays and sum ``exp(2 pi i f tof)`` per window."""
    if samples < 1:
        raise InvalidArgument("amplitude_mc needs at least one sample")
    win = np.asarray(windows, dtype=np.float64).reshape(-1, 2)
    lo = np.ascontiguousarray(win[:, 0])
    hi = np.ascontiguousarray(win[:, 1])
    re = np.zeros(len(win))
    im = np.zeros(len(win))
    count = np.zeros(len(win), dtype=np.int64)
    strip = geometry.strip if geometry.kind is GeometryKind.SPHERICAL else math.inf
    status = _kernels.amplitude_loop(
        rng.state, source.params(), geometry.params(), frequency_of(wavelength),
        lo, hi, strip, int(samples), re, im, count,
    )
    if status != _kernels.DONE:
        raise GeometryViolation("a sampled ray failed to reach the screen")
    mag2 = re * re + im * im
    with np.errstate(invalid="ignore", divide="ignore"):
        intensity = np.where(count > 0, mag2 / np.maximum(count, 1) ** 2, np.nan)
    return AmplitudeEstimate(intensity, mag2 / samples, count, int(samples))


def _screen_points(positions: np.ndarray, geometry: GeometrySpec) -> np.ndarray:
    X = geometry.X
    if geometry.kind is GeometryKind.CIRCULAR:
        return np.column_stack([X * np.cos(positions), X * np.sin(positions), np.zeros_like(positions)])
    if geometry.kind is GeometryKind.SPHERICAL:
        return np.column_stack([X * np.cos(positions), X * np.sin(positions), np.zeros_like(positions)])
    if geometry.kind is GeometryKind.FLAT:
        return np.column_stack([np.full_like(positions, X), positions, np.zeros_like(positions)])
    raise InvalidArgument("pointwise amplitudes are not defined behind a biprism")


def pointwise_amplitude_mc(positions, source: SourceSpec, geometry: GeometrySpec, samples: int,
                           rng: RngStream, wavelength: float, chunk: int = 200_000) -> np.ndarray:
    """``|mean exp(i q r)|**2`` over source points for each fixed screen point.

    Source points are drawn once and shared by every screen point.
    """
    if samples < 1:
        raise InvalidArgument("pointwise_amplitude_mc needs at least one sample")
    pos = np.asarray(positions, dtype=np.float64)
    targets = _screen_points(pos, geometry)
    q = TWO_PI / wavelength
    acc = np.zeros(len(pos), dtype=np.complex128)
    code = source.kind.code
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        pts = sample_positions_nb(rng.state, code, source.a, source.d, source.sigma, n)
        for i, (tx, ty, tz) in enumerate(targets):
            r = np.sqrt(tx * tx + (ty - pts[:, 0]) ** 2 + (tz - pts[:, 1]) ** 2)
            acc[i] += np.exp(1j * ((q * r) % TWO_PI)).sum()
        done += n
    return np.abs(acc / samples) ** 2


def direct_sampler(profile: IntensityProfile, k: int, rng: RngStream) -> np.ndarray:
    """Fraction of ``k`` shared thresholds ``r_j * I_max`` lying at or below each value."""
    if len(profile) == 0:
        raise InvalidArgument("direct_sampler needs a non-empty profile")
    if k < 1:
        raise InvalidArgument("direct_sampler needs k >= 1")
    thresholds = np.sort(rng.random_array(int(k)) * profile.peak)
    hits = np.searchsorted(thresholds, profile.values, side="right")
    return hits / float(k)


def dlm_periodic_limit(messages: Sequence[Sequence[float]], gamma: float) -> np.ndarray:
    """Limit of the internal vector fed the cyclic sequence ``messages`` forever.

    The value is sampled right after the last message of a cycle.
    """
    e = np.asarray(messages, dtype=np.float64).reshape(-1, 2)
    if len(e) == 0:
        raise InvalidArgument("need at least one message")
    if not 0 < gamma < 1:
        raise InvalidArgument("gamma must lie in (0, 1)")
    K = len(e)
    weights = gamma ** np.arange(K - 1, -1, -1, dtype=np.float64)
    return (weights[:, None] * e).sum(axis=0) / weights.sum()

