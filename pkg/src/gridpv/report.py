"""Per-run summaries computed from a trace and its scenario.

``summarize`` only reads trace channels, so a trace reloaded from its CSV
gives the same numbers as the in-memory one.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from . import analysis as A
from .config import ScenarioConfig
from .sim import SimTrace, oracle_schedule

DC_BAND = 0.02
RECOVERY = 0.1


def disturbance_edges(cfg: ScenarioConfig) -> list[float]:
    edges = [s.t for s in cfg.schedule[1:]]
    if cfg.load.phase_disconnect is not None:
        edges += [cfg.load.phase_disconnect[1], cfg.load.phase_disconnect[2]]
    return sorted(e for e in edges if 0 < e < cfg.duration)


def dc_link_metrics(trace: SimTrace, cfg: ScenarioConfig) -> dict:
    """Deviation of v_dc from its reference.

    ``steady`` excludes the start-up settle time and ``RECOVERY`` seconds
    after each disturbance edge; ``transient`` covers everything after the
    settle time.  ``reentry`` is, per edge, the time from the edge until
    v_dc is back inside the band for good (within the next edge or the end).
    """
    t = trace.t
    ref = cfg.control.v_dcref
    dev = np.abs(trace["v_dc"] - ref) / ref
    after = t >= cfg.analysis.settle
    steady = after.copy()
    edges = disturbance_edges(cfg)
    for e in edges:
        steady &= ~((t >= e) & (t < e + RECOVERY))
    reentry = []
    bounds = edges + [t[-1]]
    for k, e in enumerate(edges):
        sel = (t >= e) & (t <= bounds[k + 1])
        outside = np.nonzero(dev[sel] > DC_BAND)[0]
        reentry.append(0.0 if len(outside) == 0 else float(t[sel][outside[-1]] - e + trace.dt))
    return {
        "steady_dev": float(dev[steady].max()) if np.any(steady) else math.nan,
        "transient_dev": float(dev[after].max()) if np.any(after) else math.nan,
        "reentry": reentry,
        "edges": edges,
    }


def summarize(trace: SimTrace, cfg: ScenarioConfig) -> dict:
    fs = 1.0 / trace.dt
    f0 = cfg.grid.freq
    a = cfg.analysis
    ig, il, vg = trace.abc("i_g"), trace.abc("i_load"), trace.abc("v_g")
    thd_g = [A.thd(s, f0, fs, a.max_order, a.thd_cycles).thd_percent for s in ig]
    thd_l = [A.thd(s, f0, fs, a.max_order, a.thd_cycles).thd_percent for s in il]
    w = trace.window(a.settle - 0.25 / f0, trace.t[-1])
    pq = A.pq(vg[:, w], ig[:, w], f0, fs)
    out = {
        "thd_grid": thd_g,
        "thd_grid_mean": float(np.mean(thd_g)),
        "thd_load": thd_l,
        "thd_load_mean": float(np.mean(thd_l)),
        "p_grid": pq.p,
        "q_grid": pq.q,
        "q_percent_rated": abs(pq.q) / cfg.array.rated_power * 100.0,
        "unbalance_grid": pq.unbalance_factor,
        "unbalance_load": A.unbalance(il[:, w], f0, fs),
    }
    if cfg.load.phase_disconnect is not None:
        _, t_on, t_off = cfg.load.phase_disconnect
        wu = slice(trace.index(t_on) + 1, trace.index(t_off) + 1)
        out["unbalance_window"] = (t_on, t_off)
        out["unbalance_grid_window"] = A.unbalance(ig[:, wu], f0, fs)
        out["unbalance_load_window"] = A.unbalance(il[:, wu], f0, fs)
    out["dc"] = dc_link_metrics(trace, cfg)
    oracle = trace.oracle or oracle_schedule(cfg)
    out["mppt"] = A.mppt_metrics(trace.t, trace["p_pv"], oracle, a.track_band)
    out["oracle_p"] = [s.mpp.p for s in oracle]
    c = cfg.plant.dc_capacitance
    if "dc_capacitance" not in trace.meta:
        trace.meta["dc_capacitance"] = c
    out["power_balance"] = A.power_balance(trace, a.settle, trace.t[-1])
    return out


def write_thd_csv(trace: SimTrace, cfg: ScenarioConfig, path) -> None:
    fs = 1.0 / trace.dt
    a = cfg.analysis
    names = [f"i_g_{p}" for p in "abc"] + [f"i_load_{p}" for p in "abc"]
    reps = [A.thd(trace[n], cfg.grid.freq, fs, a.max_order, a.thd_cycles) for n in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["order"] + names)
        w.writerow(["thd_percent"] + [repr(r.thd_percent) for r in reps])
        for h in range(1, a.max_order + 1):
            w.writerow([h] + [repr(float(r.amplitudes[h])) if h < len(r.amplitudes) else "" for r in reps])


def format_summary(s: dict, header: dict) -> str:
    lines = [f"{k}: {v}" for k, v in header.items()]
    lines.append("")
    for label, key in (("grid", "thd_grid"), ("load", "thd_load")):
        per_phase = ", ".join(f"{v:.4f}" for v in s[key])
        lines.append(f"{label} current THD %: {per_phase} (mean {s[key + '_mean']:.4f})")
    lines.append(f"grid P W: {s['p_grid']:.3f}")
    lines.append(f"grid Q var: {s['q_grid']:.3f} ({s['q_percent_rated']:.4f} % of rated PV power)")
    lines.append(f"grid unbalance: {s['unbalance_grid']:.6f}  load unbalance: {s['unbalance_load']:.6f}")
    if "unbalance_window" in s:
        t_on, t_off = s["unbalance_window"]
        lines.append(f"unbalance in [{t_on}, {t_off}] s: grid {s['unbalance_grid_window']:.6f}"
                     f" load {s['unbalance_load_window']:.6f}")
    dc = s["dc"]
    lines.append(f"v_dc deviation: steady {dc['steady_dev'] * 100:.4f} %  transient {dc['transient_dev'] * 100:.4f} %")
    for e, r in zip(dc["edges"], dc["reentry"]):
        lines.append(f"  band re-entry after edge {e} s: {r:.5f} s")
    for k, (m, p) in enumerate(zip(s["mppt"], s["oracle_p"])):
        lines.append(f"MPPT segment {k}: p_mpp {p:.2f} W  time to track {m.time_to_track:.5f} s"
                     f"  efficiency {m.tracking_efficiency_percent:.4f} %"
                     f"  oscillation {m.steady_oscillation_percent:.4f} %")
    lines.append(f"power balance residual: {s['power_balance'] * 100:.4f} %")
    return "\n".join(lines) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
