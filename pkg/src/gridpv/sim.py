"""Scenario engine: chunks the run at MPPT instants and irradiance steps.

The stepping kernel advances the plant and the 20 us VSC control loop; the
slow MPPT update and the irradiance schedule are handled here between
kernel calls.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _layout as L
from . import kernel
from .anfis import AnfisNet
from .config import ScenarioConfig
from .mppt import MpptState, anfis_duty, dcref_floor, default_mppt_net, po_baseline, vdcref_update
from .plant import grid_voltages
from .pv import OperatingPoint, build_curve, open_circuit_voltage, true_mpp


class SimulationFault(RuntimeError):
    def __init__(self, message: str, time_s: float, trace: "SimTrace"):
        super().__init__(f"t={time_s:.6f} s: {message}")
        self.time = time_s
        self.trace = trace


@dataclass(frozen=True)
class OracleSegment:
    t_start: float
    t_end: float
    mpp: OperatingPoint


@dataclass
class SimTrace:
    """Uniformly sampled channels, one row per channel in ``_layout.CHANNELS``."""

    data: np.ndarray
    dt: float
    name: str = "scenario"
    oracle: tuple[OracleSegment, ...] = ()
    fault: str | None = None
    wall_time: float = 0.0
    backend: str = ""
    gains: tuple[float, float, float] = (math.nan, math.nan, math.nan)
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[L.C[name]]

    def __len__(self) -> int:
        return self.data.shape[1]

    @property
    def t(self) -> np.ndarray:
        return self.data[0]

    def abc(self, prefix: str) -> np.ndarray:
        return np.stack([self[f"{prefix}_{p}"] for p in "abc"])

    def index(self, t: float) -> int:
        return int(min(max(round(t / self.dt), 0), len(self) - 1))

    def window(self, t0: float, t1: float) -> slice:
        return slice(self.index(t0), self.index(t1) + 1)

    def to_csv(self, path) -> None:
        buf = io.StringIO()
        buf.write(",".join(L.CHANNELS) + "\n")
        np.savetxt(buf, self.data.T, fmt="%.17g", delimiter=",")
        Path(path).write_text(buf.getvalue(), encoding="utf-8")

    @classmethod
    def from_csv(cls, path, name: str = "scenario") -> "SimTrace":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        if tuple(header) != L.CHANNELS:
            raise ValueError(f"{path}: unexpected column layout")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).T.copy()
        dt = float(data[0, 1] - data[0, 0]) if data.shape[1] > 1 else 0.0
        return cls(np.ascontiguousarray(data), dt, name)


def rated_current(cfg: ScenarioConfig) -> float:
    """Grid current amplitude carrying the array's rated power."""
    return 2.0 * cfg.array.rated_power / (3.0 * cfg.grid.phase_peak)


def build_params(cfg: ScenarioConfig, gains: tuple[float, float, float] | None = None) -> np.ndarray:
    c = cfg.control
    kp, ki, band = gains if gains is not None else (c.kp, c.ki, c.band)
    p = np.zeros(L.NP)
    p[L.P_DT] = cfg.step
    p[L.P_CTRL] = cfg.ctrl_every
    pl = cfg.plant
    p[L.P_LB], p[L.P_CPV], p[L.P_CDC] = pl.boost_inductance, pl.pv_capacitance, pl.dc_capacitance
    p[L.P_L], p[L.P_R] = pl.vsc_inductance, pl.vsc_resistance
    p[L.P_LS] = cfg.grid.source_inductance
    p[L.P_RF], p[L.P_CF] = pl.filter_resistance, pl.filter_capacitance
    p[L.P_VPK], p[L.P_OMEGA] = cfg.grid.phase_peak, cfg.grid.omega
    p[L.P_RLOAD], p[L.P_LDC] = cfg.load.bridge_r, cfg.load.bridge_l
    if cfg.load.phase_disconnect is None:
        p[L.P_DISPH], p[L.P_DISON], p[L.P_DISOFF] = -1.0, 0.0, 0.0
    else:
        p[L.P_DISPH], p[L.P_DISON], p[L.P_DISOFF] = cfg.load.phase_disconnect
    p[L.P_KP] = kp
    p[L.P_KI] = ki * c.sample_time  # continuous gain to per-sample coefficient
    p[L.P_BAND] = band
    p[L.P_ILIM] = c.anti_windup * rated_current(cfg)
    p[L.P_MALEN] = max(1, int(round(c.dc_filter_window / c.sample_time)))
    p[L.P_CDV] = 0.01
    p[L.P_VFLOOR] = 1.0
    p[L.P_VDCMIN] = pl.v_dc_min
    p[L.P_IFAULT] = 5.0 * pl.current_rating
    p[L.P_FFMODE] = 0.0 if c.feedforward == "power" else 1.0
    return p


def initial_state(cfg: ScenarioConfig, curve) -> np.ndarray:
    x = np.zeros(L.NX)
    v_dc = cfg.control.v_dcref
    d0 = cfg.mppt.initial_duty
    v_pv = (1.0 - d0) * v_dc
    x[L.X_VDC] = v_dc
    x[L.X_VPV] = v_pv
    x[L.X_IB] = curve(v_pv)
    x[L.X_VCF:L.X_VCF + 3] = grid_voltages(cfg.grid.phase_peak, cfg.grid.omega, 0.0)
    # diode bridge starts at its average DC current
    x[L.X_IDC] = 3.0 * math.sqrt(2.0) / math.pi * cfg.grid.v_ll_rms / cfg.load.bridge_r
    x[L.X_DUTY] = d0
    x[L.X_VREF] = v_dc
    x[L.X_MASUM] = v_dc * int(round(cfg.control.dc_filter_window / cfg.control.sample_time))
    return x


def oracle_schedule(cfg: ScenarioConfig) -> tuple[OracleSegment, ...]:
    segs = []
    times = [s.t for s in cfg.schedule] + [cfg.duration]
    for k, s in enumerate(cfg.schedule):
        if s.t >= cfg.duration:
            break
        segs.append(OracleSegment(s.t, min(times[k + 1], cfg.duration), true_mpp(cfg.array_at(s.t))))
    return tuple(segs)


def mean_irradiance(arr) -> float:
    return sum(s.irradiance * s.count for s in arr.sections) / arr.n_series


def run_scenario(
    cfg: ScenarioConfig,
    *,
    net: AnfisNet | None = None,
    backend: str | None = None,
    gains: tuple[float, float, float] | None = None,
    duration: float | None = None,
) -> SimTrace:
    """Simulate ``cfg``; raises :class:`SimulationFault` carrying the partial trace."""
    kern = kernel.get(backend)
    started = time.perf_counter()
    dt = cfg.step
    n_total = cfg.n_steps if duration is None else int(round(duration / dt))
    mp = int(round(cfg.mppt.period / dt))
    events = set(range(mp, n_total, mp))
    for s in cfg.schedule[1:]:
        k = int(round(s.t / dt))
        if 0 < k < n_total:
            events.add(k)
    bounds = sorted(events) + [n_total]

    p = build_params(cfg, gains)
    arr0 = cfg.array_at(0.0)
    curve = build_curve(arr0)
    x = initial_state(cfg, curve)
    buf = np.full(int(p[L.P_MALEN]), x[L.X_VDC])
    tr = np.zeros((L.NCH, n_total + 1))
    kern.settle_pcc(x, p, 0.0)
    kern.record(x, p, curve.current, tr, 0, 0)
    tr[L.C["irradiance"], 0] = mean_irradiance(arr0)

    m = cfg.mppt
    if m.method == "anfis" and net is None:
        net = AnfisNet.load(m.network) if m.network else default_mppt_net(cfg.control.v_dcref)
    if m.method == "vdcref":
        dc_min, dc_max = dcref_floor(cfg.grid.v_ll_rms, m.gamma), m.dc_max
    else:
        dc_min = dc_max = cfg.control.v_dcref
    # the array is taken to start from open circuit
    st = MpptState(duty=m.initial_duty, prev_v=open_circuit_voltage(arr0), prev_i=0.0, prev_p=0.0,
                   v_dcref=cfg.control.v_dcref, step=m.vref_step, delta_d=m.delta_d, dc_min=min(dc_min, dc_max),
                   dc_max=dc_max, eps=m.eps, max_step=m.max_step)
    rng = np.random.default_rng(cfg.seed)
    noise = m.sensor_noise

    used = (gains if gains is not None else (cfg.control.kp, cfg.control.ki, cfg.control.band))
    result = SimTrace(tr, dt, cfg.name, oracle_schedule(cfg), backend=kernel.BACKEND if backend is None else backend,
                      gains=tuple(float(g) for g in used),
                      meta={"dc_capacitance": cfg.plant.dc_capacitance, "f0": cfg.grid.freq})
    k = 0
    irr = tr[L.C["irradiance"]]
    for b in bounds:
        arr = cfg.array_at(k * dt)
        curve = build_curve(arr)
        code = kern.advance(x, p, curve.current, buf, k, b - k, tr, k)
        done = int(x[L.X_NDONE])
        irr[k + 1:k + done + 1] = mean_irradiance(arr)
        if code:
            end = k + done
            result.data = tr[:, :end + 1].copy()
            result.fault = L.FAULT_TEXT.get(code, f"fault {code}")
            result.wall_time = time.perf_counter() - started
            raise SimulationFault(result.fault, end * dt, result)
        k = b
        if k % mp == 0 and k < n_total:
            lo = k - mp // 2 + 1
            v = float(np.mean(tr[L.C["v_pv"], lo:k + 1]))
            i = float(np.mean(tr[L.C["i_pv"], lo:k + 1]))
            if noise > 0:
                v *= 1.0 + noise * rng.standard_normal()
                i *= 1.0 + noise * rng.standard_normal()
            if m.method == "anfis":
                x[L.X_DUTY] = anfis_duty(net, i, v, st)
            elif m.method == "po":
                x[L.X_DUTY] = po_baseline(st, v, i)
            else:
                x[L.X_VREF] = vdcref_update(st, v, i)
    result.wall_time = time.perf_counter() - started
    return result
