"""Compiled event loops.

Each loop is a straight transcription of emit -> propagate -> detect, built
from the same jitted primitives the scalar API calls, so a loop and a Python
replay of it consume the stream identically and produce identical states.
"""

import math

import numpy as np
from numba import njit

from .core import message_nb
from .detectors import detector_step, dlm_step
from .optics import MISS, OK, propagate_nb
from .rng import next_double
from .sources import emit_nb

# loop status codes
DONE = 0
GEOMETRY_ERROR = 1
TIR_ERROR = 2


@njit(cache=True)
def locate_nb(lo, hi, pos):
    """Index of the half-open window holding ``pos``, or -1."""
    left = 0
    right = lo.shape[0]
    while left < right:
        mid = (left + right) >> 1
        if lo[mid] <= pos:
            left = mid + 1
        else:
            right = mid
    i = left - 1
    if i >= 0 and pos < hi[i]:
        return i
    return -1


@njit(cache=True)
def _arrive(s, src, geo):
    """Emit and propagate one messenger; ``status`` follows the loop codes.

    Returns ``(status, reached, position, elevation, tof)``.  Rays parallel to
    a flat screen never reach it and are reported as not ``reached``.
    """
    y, z, beta, dx, dy, dz = emit_nb(s, src)
    st, pos, el, tof = propagate_nb(geo, y, z, beta, dx, dy, dz)
    if st == OK:
        return DONE, True, pos, el, tof
    if st == MISS and int(geo[0]) == 1:
        return DONE, False, 0.0, 0.0, 0.0
    if st == MISS:
        return GEOMETRY_ERROR, False, 0.0, 0.0, 0.0
    return TIR_ERROR, False, 0.0, 0.0, 0.0


@njit(cache=True)
def static_loop(s, src, geo, freq, lo, hi, strip, model,
                P0, P1, W, Z, CL, RC, max_emit, max_received,
                tr_idx, tr_psq, tr_w, tr_z, tr_hit):
    """Run until ``max_emit`` messengers left or ``max_received`` arrived.

    Returns ``(status, emitted, received, missed)``; on error ``emitted`` is
    the index of the offending event.  Trace arrays of non-zero length record
    one row per received event.
    """
    emitted = 0
    received = 0
    missed = 0
    cap = tr_idx.shape[0]
    while emitted < max_emit and received < max_received:
        status, reached, pos, el, tof = _arrive(s, src, geo)
        if status != DONE:
            return status, emitted, received, missed
        emitted += 1
        i = -1
        if reached and abs(el) <= strip:
            i = locate_nb(lo, hi, pos)
        if i < 0:
            missed += 1
            continue
        e0, e1 = message_nb(tof, freq)
        hit, psq = detector_step(model, s, i, e0, e1, P0, P1, W, Z, CL, RC)
        if received < cap:
            tr_idx[received] = i
            tr_psq[received] = psq
            tr_w[received] = W[i]
            tr_z[received] = Z[i]
            tr_hit[received] = hit
        received += 1
    return DONE, emitted, received, missed


@njit(cache=True)
def sweep_loop(s, src, geo, freq, starts, width, model, P0, P1, W, Z,
               CL, RC, n_total, e_visit, max_emit):
    """Move one detector of aperture ``width`` back and forth over ``starts``.

    The detector dwells at a position until the cumulative number of received
    events reaches ``round((v + 1) * e_visit)`` for visit ``v``; a pass covers
    every position once and successive passes alternate direction.  Clicks
    and receipts are binned per position in ``CL``/``RC``; the detector state
    lives in slot 0 of ``P0, P1, W, Z``.

    Returns ``(status, emitted, received, discarded, missed)``.
    """
    n_pos = starts.shape[0]
    circular = int(geo[0]) == 0
    X = geo[1]
    emitted = 0
    received = 0
    discarded = 0
    missed = 0
    visit = 0
    boundary = int(math.floor(e_visit + 0.5))
    cl = np.zeros(1, dtype=np.int64)
    rc = np.zeros(1, dtype=np.int64)
    while received < n_total and emitted < max_emit:
        step = visit % n_pos
        k = step if (visit // n_pos) % 2 == 0 else n_pos - 1 - step
        a_lo = starts[k]
        a_hi = a_lo + width
        y, z, beta, dx, dy, dz = emit_nb(s, src)
        emitted += 1
        if circular:
            # landing and emission angles differ by at most asin|y/X|
            zz = abs(y / X)
            if zz < 1.0:
                margin = math.asin(zz) * (1.0 + 1e-12) + 1e-15
                if beta + margin < a_lo or beta - margin >= a_hi:
                    discarded += 1
                    continue
        st, pos, el, tof = propagate_nb(geo, y, z, beta, dx, dy, dz)
        if st != OK:
            if st == MISS and int(geo[0]) == 1:
                missed += 1
                continue
            status = GEOMETRY_ERROR if st == MISS else TIR_ERROR
            return status, emitted - 1, received, discarded, missed
        if not (a_lo <= pos < a_hi):
            discarded += 1
            continue
        e0, e1 = message_nb(tof, freq)
        cl[0] = 0
        rc[0] = 0
        detector_step(model, s, 0, e0, e1, P0, P1, W, Z, cl, rc)
        CL[k] += cl[0]
        RC[k] += 1
        received += 1
        while received >= boundary and received < n_total:
            visit += 1
            boundary = int(math.floor((visit + 1) * e_visit + 0.5))
    return DONE, emitted, received, discarded, missed


@njit(cache=True)
def ensemble_loop(seeds_state, src, geo, freq, lo, hi, strip, model,
                  p0, p1, w0, z0, event_cap, first, events_used):
    """One fresh screen per row of ``seeds_state``; stop each at its first click.

    ``first[m]`` receives the window index of the first click of screen ``m``
    or -1 when ``event_cap`` events pass without one.
    """
    n_det = lo.shape[0]
    P0 = np.empty(n_det)
    P1 = np.empty(n_det)
    W = np.empty(n_det)
    Z = np.empty(n_det)
    CL = np.zeros(n_det, dtype=np.int64)
    RC = np.zeros(n_det, dtype=np.int64)
    for m in range(seeds_state.shape[0]):
        s = seeds_state[m]
        P0[:] = p0
        P1[:] = p1
        W[:] = w0
        Z[:] = z0
        CL[:] = 0
        RC[:] = 0
        first[m] = -1
        n = 0
        while n < event_cap:
            status, reached, pos, el, tof = _arrive(s, src, geo)
            if status != DONE:
                return status, m, n
            n += 1
            if not reached or abs(el) > strip:
                continue
            i = locate_nb(lo, hi, pos)
            if i < 0:
                continue
            e0, e1 = message_nb(tof, freq)
            hit, psq = detector_step(model, s, i, e0, e1, P0, P1, W, Z, CL, RC)
            if hit == 1:
                first[m] = i
                break
        events_used[m] = n
    return DONE, -1, 0


@njit(cache=True)
def amplitude_loop(s, src, geo, freq, lo, hi, strip, samples, re, im, count):
    """Accumulate unit phasors of ray arrivals per window."""
    for _ in range(samples):
        status, reached, pos, el, tof = _arrive(s, src, geo)
        if status != DONE:
            return status
        if not reached or abs(el) > strip:
            continue
        i = locate_nb(lo, hi, pos)
        if i < 0:
            continue
        e0, e1 = message_nb(tof, freq)
        re[i] += e0
        im[i] += e1
        count[i] += 1
    return DONE


@njit(cache=True)
def transient_loop(s, stream, kind, gamma, kappa, p0, p1, w0, k_max):
    """|p|**2 after each of ``k_max`` synthetic messages.

    ``stream`` selects the message law for uniform ``r``: 0 gives
    ``(sqrt(r), sqrt(1-r))``, 1 gives ``(cos(pi r), sin(pi r))``, 2 gives
    ``(cos(2 pi r), sin(2 pi r))`` and 3 a constant ``(1, 0)``.
    """
    out = np.empty(k_max)
    w = w0
    for k in range(k_max):
        if stream == 3:
            e0, e1 = 1.0, 0.0
        else:
            r = next_double(s)
            if stream == 0:
                e0, e1 = math.sqrt(r), math.sqrt(1.0 - r)
            elif stream == 1:
                e0, e1 = math.cos(math.pi * r), math.sin(math.pi * r)
            else:
                e0, e1 = math.cos(2.0 * math.pi * r), math.sin(2.0 * math.pi * r)
        p0, p1, w = dlm_step(kind, gamma, kappa, p0, p1, w, e0, e1)
        out[k] = p0 * p0 + p1 * p1
    return out
