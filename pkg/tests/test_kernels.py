"""The compiled event loop against a plain Python loop over the public API."""

import math

import numpy as np
import pytest

from photon_events.core import GeometryViolation, message_from_tof
from photon_events.detectors import (
    ClickKind,
    ClickVariant,
    DetectorArray,
    DetectorModel,
    DlmKind,
    DlmVariant,
    OutcomeKind,
    array_process,
)
from photon_events.experiments import DetectorLayout, ExperimentConfig, run_static
from photon_events.optics import GeometryKind, GeometrySpec, propagate
from photon_events.rng import RngStream
from photon_events.sources import SourceSpec, emit

LAM = 670e-9

SETUPS = {
    "slit": (SourceSpec("double_slit", a=LAM, d=5 * LAM), GeometrySpec("circular", X=0.05e-3),
             DetectorLayout(20, -1.0, 1.0)),
    "gauss": (SourceSpec("gaussian_pair", d=8 * LAM, sigma=LAM), GeometrySpec("flat", X=0.1e-3),
              DetectorLayout(20, -0.04e-3, 0.04e-3)),
    "disc": (SourceSpec("circular_pair", a=2 * LAM, d=5 * LAM), GeometrySpec("spherical", X=0.1e-3),
             DetectorLayout(20, -1.0, 1.0)),
    "prism": (SourceSpec("gaussian_line", sigma=0.531e-3, beta_range=(-0.5 * math.radians(1), 0.5 * math.radians(1))),
              GeometrySpec("biprism", X=60e-3, Xprime=45e-3, alpha=math.radians(1), n_refr=1.5631),
              DetectorLayout(20, -0.3e-3, 0.3e-3)),
    "point": (SourceSpec("point"), GeometrySpec("circular", X=1e-3), DetectorLayout(3, -0.2, 0.2)),
}

MODELS = {
    "Ia": DetectorModel(DlmVariant(DlmKind.I, 0.99), ClickVariant(ClickKind.RANDOM)),
    "IIb": DetectorModel(DlmVariant(DlmKind.II, 0.99, 0.9, 0.9), ClickVariant(ClickKind.DETERMINISTIC, 0.95)),
    "IIIa": DetectorModel(DlmVariant(DlmKind.III, 0.99, 0.8, 0.5, p0=(0.2, 0.1)), ClickVariant(ClickKind.RANDOM)),
}


def replay(config: ExperimentConfig):
    strip = config.geometry.strip if config.geometry.kind is GeometryKind.SPHERICAL else None
    array = DetectorArray(config.layout.windows(), config.model, strip)
    rng = RngStream(config.seed)
    missed = 0
    psq = []
    for _ in range(config.emitted):
        m = emit(config.source, rng, config.frequency)
        try:
            arrival = propagate(m, config.geometry)
        except GeometryViolation:
            if config.geometry.kind is not GeometryKind.FLAT:
                raise
            missed += 1
            continue
        out = array_process(array, arrival, message_from_tof(arrival.tof, config.frequency), rng)
        if out.kind is OutcomeKind.MISS:
            missed += 1
        else:
            s = array.state(out.index)
            psq.append(s.p[0] ** 2 + s.p[1] ** 2)
    return array, missed, np.array(psq), rng.state.copy()


@pytest.mark.parametrize("model", sorted(MODELS))
@pytest.mark.parametrize("setup", sorted(SETUPS))
def test_compiled_loop_matches_python_replay(setup, model):
    source, geometry, layout = SETUPS[setup]
    config = ExperimentConfig(source, geometry, MODELS[model], layout, LAM, seed=77, emitted=3000, trace=3000)
    result = run_static(config)
    array, missed, psq, _ = replay(config)
    assert np.array_equal(result.clicks, array.clicks)
    assert np.array_equal(result.received, array.received)
    assert result.missed == missed
    assert result.emitted == 3000
    # compiled arithmetic may contract x*x + y*y into one fused operation
    assert np.max(np.abs(result.traces["psq"] - psq)) <= 1e-15
