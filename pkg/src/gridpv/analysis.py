"""Power-quality and tracking metrics over simulation traces."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

A_OP = np.exp(2j * np.pi / 3)


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class HarmonicReport:
    fundamental: float
    amplitudes: np.ndarray  # index h holds the order-h amplitude; [0] is DC
    thd_percent: float
    cycles: int


@dataclass(frozen=True)
class PqReport:
    p: float
    q: float
    unbalance_factor: float


@dataclass(frozen=True)
class MpptReport:
    time_to_track: float
    steady_oscillation_percent: float
    tracking_efficiency_percent: float


class Stats(NamedTuple):
    mean: float
    median: float
    stdev: float
    single: bool


def _tail(n: int, f0: float, fs: float, cycles: int | None) -> tuple[int, int]:
    per = fs / f0
    avail = int(math.floor(n / per + 1e-9))
    if avail < 1:
        raise AnalysisError("series shorter than one fundamental cycle")
    use = avail if cycles is None else min(cycles, avail)
    m = int(round(use * per))
    if abs(m - use * per) > 1e-6 * per:
        raise AnalysisError("sample rate is not a whole multiple of the fundamental")
    return use, m


def spectrum(series, f0: float, fs: float, cycles: int | None = None) -> tuple[np.ndarray, int]:
    """Amplitudes at integer multiples of f0 over the tail integer-cycle window."""
    x = np.asarray(series, dtype=float)
    use, m = _tail(len(x), f0, fs, cycles)
    seg = x[-m:]
    mag = np.abs(np.fft.rfft(seg)) * 2.0 / m
    mag[0] /= 2.0
    if m % 2 == 0:
        mag[-1] /= 2.0
    return mag[::use], use


def thd(series, f0: float, sample_rate: float, max_order: int = 50, cycles: int | None = None) -> HarmonicReport:
    """THD over the last ``cycles`` whole cycles (all available when None).

    Orders above the Nyquist limit are silently dropped, so ``max_order``
    may be set very high to include every resolvable harmonic.
    """
    amps, use = spectrum(series, f0, sample_rate, cycles)
    top = min(max_order, len(amps) - 1)
    amps = amps[: top + 1]
    a1 = amps[1]
    if a1 <= 0:
        raise AnalysisError("zero fundamental")
    h = math.sqrt(float(np.sum(amps[2:] ** 2))) / a1 * 100.0
    return HarmonicReport(float(a1), amps, h, use)


def phasor(series, f0: float, fs: float, cycles: int | None = None) -> complex:
    """Complex fundamental (peak, sine reference) over the tail window."""
    x = np.asarray(series, dtype=float)
    use, m = _tail(len(x), f0, fs, cycles)
    c = np.fft.rfft(x[-m:])[use] * 2.0 / m
    return complex(c)


def sequence_components(ph_abc: Sequence[complex]) -> tuple[complex, complex, complex]:
    a, b, c = ph_abc
    zero = (a + b + c) / 3.0
    pos = (a + A_OP * b + A_OP**2 * c) / 3.0
    neg = (a + A_OP**2 * b + A_OP * c) / 3.0
    return zero, pos, neg


def unbalance(i_abc, f0: float, fs: float, cycles: int | None = None) -> float:
    ph = [phasor(s, f0, fs, cycles) for s in i_abc]
    _, pos, neg = sequence_components(ph)
    if abs(pos) == 0:
        return math.inf if abs(neg) > 0 else 0.0
    return abs(neg) / abs(pos)


def pq(v_abc, i_abc, f0: float, fs: float, cycles: int | None = None) -> PqReport:
    """Mean active power, quarter-period-shift reactive power, current unbalance.

    ``q`` is positive when current lags voltage.  The quarter-period shift
    needs one extra quarter cycle of history before the analysis window.
    """
    v = np.asarray(v_abc, dtype=float)
    i = np.asarray(i_abc, dtype=float)
    if v.shape != i.shape or v.ndim != 2 or v.shape[0] != 3:
        raise AnalysisError("voltage and current series must be aligned (3, n) arrays")
    per = fs / f0
    quarter = per / 4.0
    qn = int(round(quarter))
    if abs(qn - quarter) > 1e-6:
        raise AnalysisError("quarter period is not a whole number of samples")
    use, m = _tail(v.shape[1] - qn, f0, fs, cycles)
    vw, iw = v[:, -m:], i[:, -m:]
    v_lag = v[:, -m - qn:-qn]  # v(t - T/4)
    p = float(np.mean(np.sum(vw * iw, axis=0)))
    q = float(np.mean(np.sum(v_lag * iw, axis=0)))
    u = unbalance(i, f0, fs, use)
    return PqReport(p, q, u)


def mppt_metrics(t, p_pv, oracle, band: float = 0.02, steady_tail: float = 0.1) -> list[MpptReport]:
    """One report per oracle segment.

    ``oracle`` is a sequence of ``(t_start, t_end, p_mpp)`` or objects with
    ``t_start``, ``t_end`` and ``mpp.p``.  Time to track is measured from
    the segment start; efficiency runs from the tracking instant to the
    segment end; oscillation is the peak-to-peak power over the last
    ``steady_tail`` seconds of the segment, relative to the MPP.
    """
    t = np.asarray(t, dtype=float)
    p = np.asarray(p_pv, dtype=float)
    if not len(oracle):
        raise AnalysisError("missing oracle segment")
    out = []
    for seg in oracle:
        if hasattr(seg, "mpp"):
            t0, t1, pm = seg.t_start, seg.t_end, seg.mpp.p
        else:
            t0, t1, pm = seg
        sel = (t >= t0) & (t <= t1)
        if not np.any(sel) or not pm > 0:
            raise AnalysisError(f"no samples or zero MPP in segment [{t0}, {t1}]")
        ts, ps = t[sel], p[sel]
        inside = np.abs(ps - pm) <= band * pm
        outside = np.nonzero(~inside)[0]
        if len(outside) == 0:
            k = 0
        elif outside[-1] == len(ps) - 1:
            k = None
        else:
            k = int(outside[-1]) + 1
        if k is None:
            out.append(MpptReport(math.inf, math.nan, math.nan))
            continue
        ttt = float(ts[k] - t0)
        if ts[-1] > ts[k]:
            eff = float(_integrate(ts[k:], ps[k:]) / (pm * (ts[-1] - ts[k]))) * 100.0
        else:
            eff = float(ps[k] / pm * 100.0)
        tail = ts >= ts[-1] - steady_tail
        osc = float((ps[tail].max() - ps[tail].min()) / pm * 100.0)
        out.append(MpptReport(ttt, osc, eff))
    return out


def _integrate(t, y) -> float:
    if len(t) < 2:
        return 0.0
    return float(np.sum((y[1:] + y[:-1]) * np.diff(t)) / 2.0)


def stats(values: Sequence[float]) -> Stats:
    vals = [float(v) for v in values]
    if not vals:
        raise AnalysisError("stats of an empty sequence")
    if len(vals) == 1:
        return Stats(vals[0], vals[0], 0.0, True)
    return Stats(statistics.fmean(vals), statistics.median(vals), statistics.stdev(vals), False)


def power_balance(trace, t0: float, t1: float) -> float:
    """Relative residual of PV + grid import = load + losses + DC storage.

    Returns the residual energy over the window relative to the PV energy;
    inductor and small capacitor storage are left in the residual.
    """
    w = trace.window(t0, t1)
    t = trace.t[w]
    span = t[-1] - t[0]
    if span <= 0:
        raise AnalysisError("empty power-balance window")
    e_pv = _integrate(t, trace["p_pv"][w])
    e_g = _integrate(t, trace["p_g"][w])
    e_load = _integrate(t, trace["p_load"][w])
    e_loss = _integrate(t, trace["p_loss"][w])
    c = trace.meta.get("dc_capacitance")
    if c is None:
        raise AnalysisError("trace lacks dc_capacitance metadata")
    v = trace["v_dc"][w]
    e_dc = 0.5 * c * (v[-1] ** 2 - v[0] ** 2)
    resid = e_pv + e_g - e_load - e_loss - e_dc
    return abs(resid) / abs(e_pv) if e_pv != 0 else abs(resid) / span


@dataclass(frozen=True)
class CompareRow:
    label: str
    thd_percent: float
    efficiency_percent: float
    time_to_track: float
    wall_time: float


def compare(runs, wall_times=None) -> list[CompareRow]:
    """Table rows for ``(label, trace, mppt_report, harmonic_report)`` runs, sorted by label."""
    rows = []
    for k, (label, trace, mrep, hrep) in enumerate(runs):
        wt = wall_times[k] if wall_times is not None else getattr(trace, "wall_time", math.nan)
        rows.append(CompareRow(label, hrep.thd_percent, mrep.tracking_efficiency_percent, mrep.time_to_track, wt))
    return sorted(rows, key=lambda r: r.label)


def format_table(rows: Sequence[CompareRow]) -> str:
    head = f"{'controller':<12} {'THD %':>8} {'eff %':>8} {'t_track s':>10} {'wall s':>8}"
    lines = [head]
    for r in rows:
        lines.append(
            f"{r.label:<12} {r.thd_percent:8.3f} {r.efficiency_percent:8.3f} {r.time_to_track:10.4f} {r.wall_time:8.2f}"
        )
    return "\n".join(lines)
