import math

import numpy as np
import pytest
from scipy import stats

from photon_events.core import InvalidArgument
from photon_events.rng import RngStream
from photon_events.sources import (
    SourceKind,
    SourceSpec,
    emit,
    emit_nb,
    sample_angle,
    sample_position,
)

LAM = 670e-9


def draw(spec, n, seed=1):
    rng = RngStream(seed)
    src = spec.params()
    return np.array([emit_nb(rng.state, src) for _ in range(n)])


def test_double_slit_halves_and_uniform_within_slits():
    a, d = LAM, 5 * LAM
    y = draw(SourceSpec("double_slit", a=a, d=d), 10**6)[:, 0]
    upper = y > 0
    assert abs(upper.mean() - 0.5) < 0.002
    for sign, sel in ((1, upper), (-1, ~upper)):
        lo = sign * d / 2 - a / 2
        u = (y[sel] - lo) / a
        assert u.min() >= 0 and u.max() <= 1
        assert stats.kstest(u, "uniform").pvalue > 0.01


def test_gaussian_pair_mixture_moments():
    sigma, d = LAM, 8 * LAM
    y = draw(SourceSpec("gaussian_pair", sigma=sigma, d=d), 200_000)[:, 0]
    ay = np.abs(y)
    # |y| has mean d/2 up to the negligible mass of the far component near 0
    se = ay.std() / math.sqrt(len(ay))
    assert abs(ay.mean() - d / 2) < 3 * se
    upper = y > 0
    z = (y[upper] - d / 2) / sigma
    assert stats.kstest(z, "norm").pvalue > 0.01


def test_gaussian_line_is_normal():
    sigma = 0.531e-3
    y = draw(SourceSpec("gaussian_line", sigma=sigma, beta_range=(-0.1, 0.1)), 100_000)[:, 0]
    assert stats.kstest(y / sigma, "norm").pvalue > 0.01


def test_circular_pair_support_and_area_density():
    a, d = 2 * LAM, 5 * LAM
    pts = draw(SourceSpec("circular_pair", a=a, d=d), 100_000)
    y, z = pts[:, 0], pts[:, 1]
    centre = np.where(y > 0, d / 2, -d / 2)
    r2 = (y - centre) ** 2 + z**2
    assert np.all(r2 <= (a / 2) ** 2 * (1 + 1e-12))
    # uniform on a disc: (r/R)^2 is uniform
    assert stats.kstest(r2 / (a / 2) ** 2, "uniform").pvalue > 0.01


def test_angle_moments_on_half_circle():
    beta = draw(SourceSpec("double_slit", a=LAM, d=5 * LAM), 10**6)[:, 2]
    n = len(beta)
    var = math.pi**2 / 12
    assert beta.min() >= -math.pi / 2 and beta.max() < math.pi / 2
    assert abs(beta.mean()) < 3 * math.sqrt(var / n)
    # variance of the sample variance of a uniform law: (mu4 - var^2)/n
    mu4 = math.pi**4 / 80
    assert abs(beta.var() - var) < 3 * math.sqrt((mu4 - var**2) / n)


def test_restricted_angles_stay_in_range():
    half = math.radians(0.5)
    beta = draw(SourceSpec("gaussian_line", sigma=1e-3, beta_range=(-half, half)), 50_000)[:, 2]
    assert beta.min() >= -half and beta.max() < half


def test_circular_directions_uniform_over_solid_angle():
    rows = draw(SourceSpec("circular_pair", a=LAM, d=3 * LAM), 100_000)
    polar, dx, dy, dz = rows[:, 2], rows[:, 3], rows[:, 4], rows[:, 5]
    assert np.allclose(dx**2 + dy**2 + dz**2, 1.0, atol=1e-12)
    assert np.all(dx >= 0)
    # polar angle density sin(psi) on [0, pi/2]: its CDF is 1 - cos(psi)
    assert stats.kstest(polar, lambda p: 1 - np.cos(p)).pvalue > 0.01
    azimuth = np.arctan2(dz, dy)
    assert stats.kstest((azimuth + math.pi) / (2 * math.pi), "uniform").pvalue > 0.01


def test_emission_cone_for_circular_sources():
    cone = math.radians(30)
    rows = draw(SourceSpec("circular_pair", a=LAM, d=3 * LAM, beta_range=(-cone, cone)), 20_000)
    assert rows[:, 2].max() <= cone + 1e-12
    cdf = lambda p: (1 - np.cos(p)) / (1 - math.cos(cone))
    assert stats.kstest(rows[:, 2], cdf).pvalue > 0.01


def test_emit_starts_clock_and_matches_dimension():
    rng = RngStream(4)
    m2 = emit(SourceSpec("double_slit", a=LAM, d=5 * LAM), rng, 4e14)
    m3 = emit(SourceSpec("circular_pair", a=LAM, d=5 * LAM), rng, 4e14)
    assert m2.tof == 0.0 and m3.tof == 0.0
    assert m2.dimension == 2 and m3.dimension == 3
    assert isinstance(m2.beta, float) and len(m3.beta) == 3


def test_emission_sequence_determined_by_seed():
    spec = SourceSpec("gaussian_pair", sigma=LAM, d=8 * LAM)
    first = emit(spec, RngStream(9), 1.0)
    r1, r2 = RngStream(9), RngStream(9)
    seq1 = [emit(spec, r1, 1.0) for _ in range(100)]
    seq2 = [emit(spec, r2, 1.0) for _ in range(100)]
    assert seq1 == seq2 and seq1[0] == first


def test_python_samplers_follow_the_compiled_schedule():
    spec = SourceSpec("circular_pair", a=LAM, d=5 * LAM)
    r1, r2 = RngStream(21), RngStream(21)
    pos = sample_position(spec, r1)
    direction = sample_angle(spec, r1)
    y, z, _, dx, dy, dz = emit_nb(r2.state, spec.params())
    assert pos == (0.0, y, z) and direction == (dx, dy, dz)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="double_slit", a=0.0, d=1.0),
        dict(kind="double_slit", a=2.0, d=1.0),
        dict(kind="circular_pair", a=1.0, d=1.0),
        dict(kind="gaussian_pair", sigma=0.0, d=1.0),
        dict(kind="gaussian_line", sigma=-1.0),
        dict(kind="double_slit", a=1.0, d=2.0, beta_range=(-2.0, 0.0)),
        dict(kind="double_slit", a=1.0, d=2.0, beta_range=(0.5, 0.1)),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidArgument):
        SourceSpec(**kwargs)


def test_unknown_kind():
    with pytest.raises(ValueError):
        SourceSpec("laser")
    assert SourceKind("point").dimension == 2
