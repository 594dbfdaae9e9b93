import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, signal

from bldcsim.sensing import (DelayLut, Direction, LowPassFilter, PaSource, RefSource,
                             SensingMode, bemf_area_threshold, build_delay_lut,
                             integrate_bemf, interpolate_crossing, lpf_step, phase_delay,
                             rectified_area, select_mux, zcd_compare)


def test_filter_step_response_closed_form():
    filt = LowPassFilter(100.0)
    dt = 1e-5
    a = 2 * math.pi * 100.0 * dt
    for n in range(1, 200):
        y = lpf_step(filt, 1.0, dt)
        assert y == pytest.approx(1 - (1 - a) ** n, rel=1e-12)


def test_filter_matches_scipy_difference_equation():
    dt, fc = 1e-6, 100.0
    a = 2 * math.pi * fc * dt
    x = np.sin(2 * math.pi * 50.0 * np.arange(20000) * dt)
    # y[n+1] = (1-a) y[n] + a x[n]  ->  H(z) = a z^-1 / (1 - (1-a) z^-1)
    ref = signal.lfilter([0.0, a], [1.0, -(1.0 - a)], x)
    filt = LowPassFilter(fc)
    ours = [0.0] + [filt.step(v, dt) for v in x[:-1]]
    assert np.allclose(ours, ref, atol=1e-12)


@pytest.mark.parametrize("f", [10.0, 50.0, 100.0, 400.0])
def test_phase_delay_matches_measured_sine_lag(f):
    fc, dt = 100.0, 1e-6
    filt = LowPassFilter(fc)
    w = 2 * math.pi * f
    prev, crossings = 0.0, []
    n = int(6.0 / f / dt)
    for k in range(n):
        t = k * dt
        y = filt.step(math.sin(w * t), dt)
        if prev < 0.0 <= y:
            crossings.append(t + dt - dt * y / (y - prev))
        prev = y
    lag = crossings[-1] - round(crossings[-1] * f) / f
    assert lag == pytest.approx(phase_delay(fc, f), rel=5e-3)


def test_phase_delay_limits():
    fc = 100.0
    assert phase_delay(LowPassFilter(fc), 1e-3) == pytest.approx(1 / (2 * math.pi * fc), rel=1e-6)
    assert phase_delay(fc, 100.0) == pytest.approx(1 / 800.0)
    with pytest.raises(ValueError):
        phase_delay(fc, 0.0)
    with pytest.raises(ValueError):
        LowPassFilter(0.0)


def test_lut_interpolates_and_clamps():
    lut = DelayLut(((10.0, 4e-3), (20.0, 2e-3), (40.0, 1e-3)))
    assert lut.lookup(15.0) == pytest.approx(3e-3)
    assert lut.lookup(30.0) == pytest.approx(1.5e-3)
    assert lut.lookup(1.0) == 4e-3
    assert lut.lookup(1e6) == 1e-3


@given(st.floats(1.0, 1e4), st.floats(1.0, 3000.0))
def test_lut_close_to_exact_delay(fc, f):
    lut = build_delay_lut(fc, 1.0, 3000.0, 256)
    # linear interpolation of a smooth convex curve; 256 log points is plenty
    assert lut.lookup(f) == pytest.approx(phase_delay(fc, f), rel=1e-2)


@given(st.floats(1.0, 1e3), st.integers(2, 50))
def test_lut_monotone(fc, n):
    lut = build_delay_lut(fc, 0.5, 5000.0, n)
    f = np.geomspace(0.1, 1e4, 97)
    adv = [lut.lookup(x) for x in f]
    assert all(b <= a for a, b in zip(adv, adv[1:]))
    assert lut.frequencies[0] == 0.5 and lut.frequencies[-1] == 5000.0


def test_lut_csv_roundtrip(tmp_path):
    lut = build_delay_lut(100.0, 5.0, 2000.0, 16)
    path = tmp_path / "lut.csv"
    lut.to_csv(path)
    assert DelayLut.from_csv(path) == lut
    assert DelayLut.from_csv(io.StringIO(lut.to_csv())) == lut


@pytest.mark.parametrize("entries", [
    ((1.0, 1e-3),),
    ((2.0, 1e-3), (1.0, 5e-4)),
    ((1.0, 1e-3), (2.0, 2e-3)),
    ((1.0, 0.0), (2.0, -1.0)),
    ((100.0, 1e-2), (200.0, 1e-3)),
])
def test_lut_validation(entries):
    with pytest.raises(ValueError):
        DelayLut(entries)


def test_lut_bad_inputs():
    with pytest.raises(ValueError):
        build_delay_lut(100.0, 10.0, 5.0, 8)
    with pytest.raises(ValueError):
        build_delay_lut(100.0, 1.0, 5.0, 1)
    with pytest.raises(ValueError, match="header"):
        DelayLut.from_csv(io.StringIO("a,b\n1,2\n"))


def test_integrate_bemf_rectifies():
    acc = integrate_bemf(0.0, 2.0, 0.1, Direction.RISING)
    acc = integrate_bemf(acc, -1.0, 0.1, Direction.RISING)
    assert acc == pytest.approx(0.2)
    assert integrate_bemf(0.0, -2.0, 0.1, Direction.FALLING) == pytest.approx(0.2)


def test_area_threshold_matches_triangle():
    ke, p, omega = 0.01, 7, 300.0
    t30 = (math.pi / 6) / (p * omega)
    assert bemf_area_threshold(ke, p) == pytest.approx(0.5 * ke * omega * t30, rel=1e-12)


@given(st.lists(st.floats(0.0, 5.0), min_size=2, max_size=40), st.floats(0.0, 1.0))
def test_rectified_area_matches_trapezoid(values, start_frac):
    t = np.linspace(0.0, 1.0, len(values))
    samples = list(zip(t, values))
    t_start = start_frac
    # oracle: dense linear resampling of the polyline from t_start
    tt = np.linspace(t_start, 1.0, 20001)
    ref = integrate.trapezoid(np.interp(tt, t, values), tt)
    assert rectified_area(samples, t_start, Direction.RISING) == pytest.approx(ref, abs=1e-6)
    neg = [(a, -b) for a, b in samples]
    assert rectified_area(neg, t_start, Direction.FALLING) == pytest.approx(ref, abs=1e-6)


@given(st.floats(-10, 10), st.floats(1e-6, 1.0), st.floats(0.01, 0.99), st.floats(0.1, 10))
def test_interpolate_crossing_exact_for_lines(t0, dt, frac, slope):
    t1 = t0 + dt
    root = t0 + frac * dt
    tc = interpolate_crossing(t0, slope * (t0 - root), t1, slope * (t1 - root))
    assert tc == pytest.approx(root, abs=1e-9)
    assert t0 <= interpolate_crossing(t0, 1.0, t1, 2.0) <= t1


def test_zcd_compare_and_mux():
    assert zcd_compare(9.0, 8.0, False) == (True, True)
    assert zcd_compare(7.0, 8.0, False) == (False, False)
    assert select_mux(SensingMode.LOW_SPEED_INTEGRATION) == (
        PaSource.FILTERED_INTEGRATOR_PATH, RefSource.GROUND)
    assert select_mux(SensingMode.HIGH_SPEED_ZCD) == (PaSource.DIRECT_TERMINAL, RefSource.HALF_VBUS)


def test_lut_recovers_discrete_filter_lag_at_every_knot():
    # exact lag of the sampled filter from its transfer function
    dt, fc = 1e-6, 100.0
    a = 2 * math.pi * fc * dt
    lut = build_delay_lut(fc, 5.0, 2000.0, 64)
    f = np.array(lut.frequencies)
    _, h = signal.freqz([0.0, a], [1.0, -(1.0 - a)], worN=2 * math.pi * f * dt)
    lag = -np.unwrap(np.angle(h)) / (2 * math.pi * f)
    adv = np.array([x for _, x in lut.entries])
    assert np.all(np.abs(lag - adv) <= dt)


@given(st.floats(-20, 20), st.floats(-20, 20), st.booleans())
def test_zcd_compare_pure_and_ties_not_above(v, ref, prev):
    assert zcd_compare(v, ref, prev) == zcd_compare(v, ref, prev)
    assert zcd_compare(ref, ref, prev)[0] is False
