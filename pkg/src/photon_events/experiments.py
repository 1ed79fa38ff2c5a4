"""Complete runs: detector arrays, the moving detector, transients, ensembles.

Every run is a pure function of its configuration.  All randomness comes
from one stream seeded by ``config.seed``; ensembles and oracle estimates use
substreams derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .core import (
    ConfigurationError,
    GeometryViolation,
    InvalidArgument,
    TotalInternalReflection,
    frequency_of,
    wavenumber,
)
from .detectors import DetectorArray, DetectorModel, DlmKind, DlmVariant
from .optics import GeometryKind, GeometrySpec
from .oracle import (
    IntensityProfile,
    amplitude_mc,
    intensity_circular,
    intensity_gaussian,
    intensity_slit,
)
from .rng import RngStream, derive_seed, seed_state
from .sources import SourceKind, SourceSpec

UNLIMITED = 2 ** 62
ORACLE_STREAM = 0x0AC1E
ENSEMBLE_STREAM = 0xE5E


@dataclass(frozen=True)
class DetectorLayout:
    """``count`` equal windows tiling ``[low, high)`` in screen units."""

    count: int
    low: float
    high: float

    def windows(self) -> np.ndarray:
        edges = np.linspace(self.low, self.high, self.count + 1)
        return np.column_stack([edges[:-1], edges[1:]])


@dataclass(frozen=True)
class SweepSpec:
    delta_theta: float
    n_total: int
    n_sweeps: int
    path: tuple[float, float] = (-0.5 * math.pi, 0.5 * math.pi)

    def __post_init__(self):
        if not self.delta_theta > 0:
            raise ConfigurationError("sweep step must be positive", "delta_deg")
        if self.n_total < 1:
            raise ConfigurationError("n_total must be at least 1", "n_total")
        if self.n_sweeps < 1:
            raise ConfigurationError("n_sweeps must be at least 1", "n_sweeps")
        if not self.path[1] > self.path[0]:
            raise ConfigurationError("sweep path must have positive length", "path_high_deg")

    @property
    def positions(self) -> int:
        return max(1, int(round((self.path[1] - self.path[0]) / self.delta_theta)))

    @property
    def events_per_visit(self) -> float:
        return self.n_total / (self.positions * self.n_sweeps)

    def starts(self) -> np.ndarray:
        return self.path[0] + self.delta_theta * np.arange(self.positions)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run depends on.

    The budget is ``emitted`` messengers, ``received_per_detector`` mean
    arrivals per window, or both (the run stops at whichever comes first).
    """

    source: SourceSpec
    geometry: GeometrySpec
    model: DetectorModel
    layout: DetectorLayout
    wavelength: float
    seed: int = 0
    emitted: int | None = None
    received_per_detector: float | None = None
    sweep: SweepSpec | None = None
    trace: int = 0
    event_cap: int = 10 ** 8
    oracle_samples: int = 10 ** 7
    name: str = ""

    @property
    def frequency(self) -> float:
        return frequency_of(self.wavelength)

    @property
    def q(self) -> float:
        return wavenumber(self.wavelength)

    @property
    def strip(self) -> float:
        return self.geometry.strip if self.geometry.kind is GeometryKind.SPHERICAL else math.inf

    def validate(self) -> None:
        if not self.wavelength > 0:
            raise ConfigurationError("wavelength must be positive", "lambda_nm")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer", "seed")
        if self.layout.count < 1:
            raise ConfigurationError("need at least one detector", "count")
        if not self.layout.high > self.layout.low:
            raise ConfigurationError("detector range must have positive length", "high")
        if self.geometry.kind.angular and (self.layout.low < -0.5 * math.pi or self.layout.high > 0.5 * math.pi):
            raise ConfigurationError("angular detector range must lie within [-90, 90] degrees", "low_deg")
        if self.sweep is None:
            if self.emitted is None and self.received_per_detector is None:
                raise ConfigurationError("a run needs an event budget", "emitted")
            if self.emitted is not None and self.emitted < 1:
                raise ConfigurationError("emitted budget must be positive", "emitted")
            if self.received_per_detector is not None and not self.received_per_detector > 0:
                raise ConfigurationError("received budget must be positive", "received_per_detector")
        if self.source.kind is SourceKind.CIRCULAR_PAIR and self.geometry.kind is not GeometryKind.SPHERICAL:
            raise ConfigurationError("circular sources need a spherical screen", "kind")
        if self.geometry.kind is GeometryKind.SPHERICAL and self.source.kind is not SourceKind.CIRCULAR_PAIR:
            raise ConfigurationError("a spherical screen needs circular sources", "kind")
        if self.geometry.kind is GeometryKind.CIRCULAR:
            reach = 0.5 * self.source.d + 0.5 * self.source.a + 6.0 * self.source.sigma
            if not reach < self.geometry.X:
                raise ConfigurationError("source extends beyond the circular screen", "X_mm")
        if self.geometry.kind is GeometryKind.BIPRISM:
            lo, hi = self.source.angles
            if max(abs(lo), abs(hi)) > 0.5 * self.geometry.alpha:
                raise ConfigurationError("biprism emission angles must lie within +-alpha/2", "beta_max_deg")


@dataclass
class RunResult:
    """Per-window counts with run totals.

    ``emitted == received + missed + discarded`` for every run mode.
    """

    windows: np.ndarray
    clicks: np.ndarray
    received: np.ndarray
    emitted: int
    missed: int = 0
    discarded: int = 0
    traces: dict[str, np.ndarray] | None = None
    config: ExperimentConfig | None = None

    @property
    def positions(self) -> np.ndarray:
        return 0.5 * (self.windows[:, 0] + self.windows[:, 1])

    @property
    def total_clicks(self) -> int:
        return int(self.clicks.sum())

    @property
    def total_received(self) -> int:
        return int(self.received.sum())

    @property
    def detected_ratio(self) -> float:
        """Clicks per messenger that reached a detector."""
        return self.total_clicks / self.total_received if self.total_received else float("nan")

    @property
    def clicks_per_emitted(self) -> float:
        return self.total_clicks / self.emitted if self.emitted else float("nan")


def _raise_loop_error(status: int, index: int) -> None:
    if status == _kernels.TIR_ERROR:
        raise TotalInternalReflection(f"total internal reflection at event {index}", index)
    raise GeometryViolation(f"ray failed to reach the screen at event {index}", index)


def run_static(config: ExperimentConfig) -> RunResult:
    """Fixed detector array; stop when the event budget is used up."""
    config.validate()
    if config.sweep is not None:
        raise ConfigurationError("run_static does not take a sweep section", "sweep")
    array = DetectorArray(config.layout.windows(), config.model, None)
    rng = RngStream(config.seed)
    max_emit = config.emitted if config.emitted is not None else UNLIMITED
    if config.received_per_detector is not None:
        max_received = int(round(config.received_per_detector * config.layout.count))
    else:
        max_received = UNLIMITED
    cap = int(config.trace)
    tr_idx = np.zeros(cap, dtype=np.int64)
    tr_hit = np.zeros(cap, dtype=np.int64)
    tr_psq, tr_w, tr_z = np.zeros(cap), np.zeros(cap), np.zeros(cap)
    status, emitted, received, missed = _kernels.static_loop(
        rng.state, config.source.params(), config.geometry.params(), config.frequency,
        array.lo, array.hi, config.strip, config.model.params(), *array.arrays(),
        max_emit, max_received, tr_idx, tr_psq, tr_w, tr_z, tr_hit,
    )
    if status != _kernels.DONE:
        _raise_loop_error(status, emitted)
    traces = None
    if cap:
        n = min(cap, received)
        traces = {"window": tr_idx[:n], "psq": tr_psq[:n], "w": tr_w[:n], "z": tr_z[:n], "click": tr_hit[:n]}
    return RunResult(
        windows=np.column_stack([array.lo, array.hi]),
        clicks=array.clicks.copy(),
        received=array.received.copy(),
        emitted=int(emitted),
        missed=int(missed),
        traces=traces,
        config=config,
    )


def run_sweep(config: ExperimentConfig) -> RunResult:
    """One detector of aperture ``delta_theta`` swept back and forth along the path.

    Counts are binned per sweep position; the detector state is never reset.
    """
    config.validate()
    sweep = config.sweep
    if sweep is None:
        raise ConfigurationError("run_sweep needs a sweep section", "sweep")
    if not config.geometry.kind.angular:
        raise ConfigurationError("the sweep moves along an angular screen", "kind")
    if sweep.events_per_visit < 1:
        raise ConfigurationError(
            f"fewer than one event per visit ({sweep.events_per_visit:g})", "n_sweeps"
        )
    starts = sweep.starts()
    n_pos = len(starts)
    m = config.model
    P0 = np.array([m.dlm.p0[0]])
    P1 = np.array([m.dlm.p0[1]])
    W = np.array([m.dlm.initial_w])
    Z = np.array([m.click.z0])
    CL = np.zeros(n_pos, dtype=np.int64)
    RC = np.zeros(n_pos, dtype=np.int64)
    rng = RngStream(config.seed)
    max_emit = config.emitted if config.emitted is not None else UNLIMITED
    status, emitted, received, discarded, missed = _kernels.sweep_loop(
        rng.state, config.source.params(), config.geometry.params(), config.frequency,
        starts, sweep.delta_theta, m.params(), P0, P1, W, Z, CL, RC,
        int(sweep.n_total), float(sweep.events_per_visit), max_emit,
    )
    if status != _kernels.DONE:
        _raise_loop_error(status, emitted)
    return RunResult(
        windows=np.column_stack([starts, starts + sweep.delta_theta]),
        clicks=CL,
        received=RC,
        emitted=int(emitted),
        missed=int(missed),
        discarded=int(discarded),
        config=config,
    )


def efficiency_config(events: int, model: DetectorModel | None = None, seed: int = 0,
                      wavelength: float = 670e-9, X: float = 1.0) -> ExperimentConfig:
    """Point source at the center of a circular screen, one detector covering it.

    Every messenger travels exactly ``X``, so all messages are identical.
    """
    return ExperimentConfig(
        source=SourceSpec(SourceKind.POINT),
        geometry=GeometrySpec(GeometryKind.CIRCULAR, X=X),
        model=model or DetectorModel(),
        layout=DetectorLayout(1, -0.5 * math.pi, 0.5 * math.pi),
        wavelength=wavelength,
        seed=seed,
        emitted=events,
        trace=events,
        name="efficiency",
    )


def run_efficiency(config: ExperimentConfig) -> np.ndarray:
    """Cumulative clicks/received after each received event of a single detector."""
    if config.layout.count != 1:
        raise ConfigurationError("the efficiency run uses a single detector", "count")
    budget = config.emitted or int(round(config.received_per_detector or 0))
    result = run_static(replace(config, trace=max(config.trace, budget)))
    hits = result.traces["click"]
    return np.cumsum(hits) / np.arange(1, len(hits) + 1)


TRANSIENT_STREAMS = {"sqrt": 0, "half": 1, "full": 2, "constant": 3}


def transient_variant(kind: DlmKind | str, gamma: float = 0.999, kappa: float = 0.9,
                      w0: float = 0.9, p0=(1.0, 0.0)) -> DlmVariant:
    return DlmVariant(kind=DlmKind(kind), gamma=gamma, kappa=kappa, w0=w0, p0=p0)


def run_transient(variant: DlmVariant, stream: str, k_max: int, seed: int = 0) -> np.ndarray:
    """``|p_k|**2`` for ``k = 1..k_max`` under a synthetic message stream.

    ``stream`` is ``sqrt`` for ``(sqrt(r), sqrt(1-r))``, ``half`` for
    ``(cos(pi r), sin(pi r))``, ``full`` for ``(cos(2 pi r), sin(2 pi r))`` or
    ``constant`` for a fixed ``(1, 0)``.
    """
    if stream not in TRANSIENT_STREAMS:
        raise InvalidArgument(f"unknown message stream {stream!r}; choose from {sorted(TRANSIENT_STREAMS)}")
    if k_max < 1:
        raise InvalidArgument("k_max must be positive")
    rng = RngStream(seed)
    return _kernels.transient_loop(
        rng.state, TRANSIENT_STREAMS[stream], variant.kind.code, variant.gamma, variant.kappa,
        variant.p0[0], variant.p0[1], variant.initial_w, int(k_max),
    )


@dataclass
class EnsembleResult:
    """First-click windows of ``M`` independent single-use screens."""

    windows: np.ndarray
    histogram: np.ndarray
    first: np.ndarray
    events: np.ndarray
    no_click: int

    @property
    def positions(self) -> np.ndarray:
        return 0.5 * (self.windows[:, 0] + self.windows[:, 1])


def run_single_shot_ensemble(config: ExperimentConfig, M: int) -> EnsembleResult:
    """Fresh detectors and a fresh substream per screen; keep only the first click."""
    config.validate()
    if M < 1:
        raise InvalidArgument("M must be at least 1")
    windows = config.layout.windows()
    lo = np.ascontiguousarray(windows[:, 0])
    hi = np.ascontiguousarray(windows[:, 1])
    base = derive_seed(config.seed, ENSEMBLE_STREAM)
    states = np.stack([seed_state(derive_seed(base, m)) for m in range(M)])
    first = np.full(M, -1, dtype=np.int64)
    events = np.zeros(M, dtype=np.int64)
    m = config.model
    status, screen, index = _kernels.ensemble_loop(
        states, config.source.params(), config.geometry.params(), config.frequency,
        lo, hi, config.strip, m.params(), m.dlm.p0[0], m.dlm.p0[1], m.dlm.initial_w,
        m.click.z0, int(config.event_cap), first, events,
    )
    if status != _kernels.DONE:
        _raise_loop_error(status, index)
    hist = np.bincount(first[first >= 0], minlength=len(windows))
    return EnsembleResult(windows, hist, first, events, int(np.sum(first < 0)))


# ---------------------------------------------------------------- analysis

class UndefinedVisibility(ValueError):
    pass


def visibility(values, mask=None) -> float:
    v = np.asarray(values, dtype=np.float64)
    if mask is not None:
        v = v[np.asarray(mask, dtype=bool)]
    v = v[np.isfinite(v)]
    if v.size == 0:
        raise UndefinedVisibility("no values in the visibility region")
    hi, lo = v.max(), v.min()
    if hi + lo <= 0:
        raise UndefinedVisibility("visibility of an all-zero profile is undefined")
    return float((hi - lo) / (hi + lo))


@dataclass(frozen=True)
class Comparison:
    scale: float
    rms: float
    visibility_sim: float
    visibility_oracle: float


def fit_and_compare(sim, oracle: IntensityProfile | np.ndarray, region=None) -> Comparison:
    """Least-squares scale of the oracle onto the counts, then residual and visibilities.

    ``sim`` is a :class:`RunResult` (its clicks are used) or an array of
    counts.  ``region`` is an optional boolean mask selecting the windows
    used for the visibilities.
    """
    counts = np.asarray(sim.clicks if isinstance(sim, RunResult) else sim, dtype=np.float64)
    ref = np.asarray(oracle.values if isinstance(oracle, IntensityProfile) else oracle, dtype=np.float64)
    if counts.shape != ref.shape:
        raise InvalidArgument("simulation and oracle grids differ")
    denom = float(np.dot(ref, ref))
    if denom == 0.0:
        raise UndefinedVisibility("oracle profile is identically zero")
    scale = float(np.dot(counts, ref)) / denom
    fitted = scale * ref
    peak = float(fitted.max())
    rms = float(np.sqrt(np.mean((counts - fitted) ** 2)) / peak) if peak > 0 else float("nan")
    return Comparison(scale, rms, visibility(counts, region), visibility(ref, region))


def oracle_profile(config: ExperimentConfig, positions=None) -> IntensityProfile:
    """Wave-theory reference on the detector grid of ``config``.

    Closed forms cover the double slit, the Gaussian pair and the circular
    sources.  Behind the biprism the reference is ``|sum of phasors|**2``
    over rays sampled with a substream of the config seed, so it carries
    the same arrival density as the simulated counts.
    """
    src, geo = config.source, config.geometry
    if positions is None:
        windows = config.layout.windows()
        positions = 0.5 * (windows[:, 0] + windows[:, 1])
    positions = np.asarray(positions, dtype=np.float64)
    q = config.q
    if src.kind is SourceKind.DOUBLE_SLIT and geo.kind is GeometryKind.CIRCULAR:
        values = intensity_slit(positions, q, src.a, src.d)
    elif src.kind is SourceKind.GAUSSIAN_PAIR and geo.kind is GeometryKind.FLAT:
        values = intensity_gaussian(positions, q, src.sigma, src.d, geo.X)
    elif src.kind is SourceKind.CIRCULAR_PAIR and geo.kind is GeometryKind.SPHERICAL:
        # the source parameter is a diameter, the closed form takes a radius
        values = intensity_circular(positions, q, 0.5 * src.a, src.d)
    elif geo.kind is GeometryKind.BIPRISM:
        windows = config.layout.windows()
        rng = RngStream(derive_seed(config.seed, ORACLE_STREAM))
        est = amplitude_mc(windows, src, geo, config.oracle_samples, rng, config.wavelength)
        values = est.weighted
    else:
        raise InvalidArgument(f"no wave-theory reference for {src.kind.value} on a {geo.kind.value} screen")
    return IntensityProfile(positions, np.asarray(values, dtype=np.float64))
