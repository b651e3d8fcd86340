import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridpv import analysis as A

FS = 10_000.0
F0 = 50.0
T = np.arange(0, 0.2, 1 / FS)
W = 2 * np.pi * F0


def test_thd_pure_sine():
    assert A.thd(np.sin(W * T), F0, FS).thd_percent == pytest.approx(0.0, abs=0.01)


def test_thd_fifth_harmonic():
    x = np.sin(W * T) + 0.1 * np.sin(5 * W * T)
    assert A.thd(x, F0, FS).thd_percent == pytest.approx(10.0, abs=0.05)


def test_thd_square_wave():
    fs = 100_000.0
    t = np.arange(0, 0.1, 1 / fs)
    x = np.where(np.sin(W * t + 1e-9) >= 0, 1.0, -1.0)
    full = A.thd(x, F0, fs, max_order=int(fs / F0 / 2) - 1)
    assert full.thd_percent == pytest.approx(48.3, abs=0.5)
    # orders above 50 carry about 1% of the 48.3%
    assert A.thd(x, F0, fs).thd_percent == pytest.approx(47.3, abs=0.3)


def test_thd_short_window_refused():
    with pytest.raises(A.AnalysisError):
        A.thd(np.sin(W * T[:100]), F0, FS)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(0.0, 0.5))
def test_thd_scale_invariant(scale, h3):
    x = np.sin(W * T) + h3 * np.sin(3 * W * T + 0.3)
    a = A.thd(x, F0, FS).thd_percent
    assert A.thd(scale * x, F0, FS).thd_percent == pytest.approx(a, rel=1e-9, abs=1e-9)


def test_parseval_bound():
    rng = np.random.default_rng(0)
    x = np.sin(W * T) + 0.2 * rng.standard_normal(len(T))
    rep = A.thd(x, F0, FS, cycles=5)
    n = int(5 * FS / F0)
    power = np.mean(x[-n:] ** 2)
    assert np.sum(rep.amplitudes[1:] ** 2) / 2 <= power * 1.001


def _abc(amp=1.0, phase=0.0):
    return np.stack([amp * np.sin(W * T + phase - k * 2 * np.pi / 3) for k in range(3)])


def test_pq_unity_and_quadrature():
    v = 300 * _abc()
    s = 3 * 300 * 10 / 2
    rep = A.pq(v, 10 * _abc(), F0, FS)
    assert abs(rep.q) < 0.005 * s and rep.p == pytest.approx(s, rel=1e-6)
    assert rep.unbalance_factor < 1e-6
    lag = A.pq(v, 10 * _abc(phase=-np.pi / 2), F0, FS)
    assert abs(lag.p) < 0.005 * s and lag.q == pytest.approx(s, rel=1e-6)


def test_single_phase_unbalance():
    i = np.stack([np.sin(W * T), np.zeros_like(T), np.zeros_like(T)])
    assert A.unbalance(i, F0, FS) == pytest.approx(1.0, abs=0.01)


def test_pq_misaligned_refused():
    with pytest.raises(A.AnalysisError):
        A.pq(_abc(), _abc()[:, :-1], F0, FS)


def test_mppt_metrics_examples():
    t = np.linspace(0, 1, 1001)
    seg = [(0.0, 1.0, 1000.0)]
    r = A.mppt_metrics(t, np.full_like(t, 1000.0), seg)[0]
    assert r.tracking_efficiency_percent == pytest.approx(100.0)
    assert r.steady_oscillation_percent == 0.0 and r.time_to_track == 0.0
    r = A.mppt_metrics(t, np.full_like(t, 500.0), seg, band=0.6)[0]
    assert r.tracking_efficiency_percent == pytest.approx(50.0)
    ramp = np.minimum(t / 0.4, 1.0) * 1000.0
    r = A.mppt_metrics(t, ramp, seg)[0]
    assert r.time_to_track == pytest.approx(0.392, abs=1e-3)
    with pytest.raises(A.AnalysisError):
        A.mppt_metrics(t, ramp, [])


def test_stats_examples():
    assert A.stats([1, 2, 3])[:3] == (2, 2, 1)
    s = A.stats([4.0])
    assert s.mean == s.median == 4.0 and s.stdev == 0.0 and s.single
    assert A.stats([5.0] * 4).stdev == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=20), st.floats(-1e3, 1e3))
def test_stats_shift(vals, c):
    a, b = A.stats(vals), A.stats([v + c for v in vals])
    assert b.mean == pytest.approx(a.mean + c, abs=1e-9)
    assert b.stdev == pytest.approx(a.stdev, abs=1e-7)


def test_compare_rows():
    class Tr:
        wall_time = 1.5

    m = A.MpptReport(0.1, 0.05, 99.9)
    h = A.HarmonicReport(1.0, np.zeros(51), 3.0, 5)
    rows = A.compare([("b", Tr(), m, h), ("a", Tr(), m, h)])
    assert len(rows) == 2 and [r.label for r in rows] == ["a", "b"]
    assert dataclasses.replace(rows[0], label="b") == rows[1]
    assert "controller" in A.format_table(rows)


def test_power_balance_needs_capacitance():
    class Tr:
        meta = {}
        t = np.linspace(0, 1, 11)

        def window(self, a, b):
            return slice(0, 11)

        def __getitem__(self, k):
            return np.ones(11)

    with pytest.raises(A.AnalysisError):
        A.power_balance(Tr(), 0.0, 1.0)
    assert math.isfinite(A.thd(np.sin(W * T), F0, FS).fundamental)
