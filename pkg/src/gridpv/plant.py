"""Electrical plant: averaged boost, DC link, switched VSC, grid, filter, bridge load.

Every element is a small explicit update so the compiled kernel and the
pure-Python stepper can share one definition of the arithmetic.  Three-wire
quantities are kept zero-sum; the star point of the ripple filter floats.

The PCC node is algebraic.  Seen from the load, each phase is a Thevenin
source ``e = v_cf + R_f (i_g + i_vsc)`` behind the filter resistance, and
the diode bridge shares its DC current among the phases clamped to the
positive (negative) rail.  Commutation overlap follows from that sharing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

TWO_PI_3 = 2.0 * math.pi / 3.0


class PlantFault(RuntimeError):
    """The plant left its physical operating region."""

    def __init__(self, message: str, time: float | None = None):
        self.time = time
        super().__init__(message if time is None else f"t={time:.6f} s: {message}")


@dataclass(frozen=True)
class GridParams:
    v_ll_rms: float = 415.0
    freq: float = 50.0
    source_inductance: float = 50e-6

    def __post_init__(self):
        if not self.v_ll_rms > 0:
            raise ValueError("grid.v_ll_rms must be > 0")
        if not self.freq > 0:
            raise ValueError("grid.freq must be > 0")
        if not self.source_inductance > 0:
            raise ValueError("grid.source_inductance must be > 0")

    @property
    def phase_peak(self) -> float:
        return self.v_ll_rms * math.sqrt(2.0) / math.sqrt(3.0)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.freq


@dataclass(frozen=True)
class LoadConfig:
    bridge_r: float = 30.0
    bridge_l: float = 10e-3
    phase_disconnect: tuple[int, float, float] | None = None

    def __post_init__(self):
        if not self.bridge_r > 0:
            raise ValueError("load.bridge_r must be > 0")
        if self.bridge_l < 0:
            raise ValueError("load.bridge_l must be >= 0")
        if self.phase_disconnect is not None:
            ph, t_on, t_off = self.phase_disconnect
            if ph not in (0, 1, 2):
                raise ValueError("load.phase_disconnect phase must be 0, 1 or 2")
            if not t_on < t_off:
                raise ValueError("load.phase_disconnect needs t_on < t_off")

    def disconnected(self, t: float) -> int:
        """Index of the phase open at time t, or -1."""
        if self.phase_disconnect is None:
            return -1
        ph, t_on, t_off = self.phase_disconnect
        return ph if t_on <= t < t_off else -1


@dataclass(frozen=True)
class PlantParams:
    boost_inductance: float = 3e-3
    pv_capacitance: float = 100e-6
    dc_capacitance: float = 30e-3
    vsc_inductance: float = 2.5e-3
    vsc_resistance: float = 0.05
    filter_resistance: float = 5.0
    filter_capacitance: float = 10e-6
    current_rating: float = 64.0  # amps peak
    v_dc_min: float = 50.0

    def __post_init__(self):
        for name in ("boost_inductance", "pv_capacitance", "dc_capacitance", "vsc_inductance",
                     "filter_resistance", "filter_capacitance", "current_rating"):
            if not getattr(self, name) > 0:
                raise ValueError(f"plant.{name} must be > 0")
        if self.vsc_resistance < 0:
            raise ValueError("plant.vsc_resistance must be >= 0")


@dataclass
class PlantState:
    v_dc: float = 700.0
    i_boost: float = 0.0
    v_pv: float = 0.0
    i_vsc: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    i_g: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    v_cf: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    i_bridge: float = 0.0
    time: float = 0.0


def grid_voltages(v_peak: float, omega: float, t: float) -> tuple[float, float, float]:
    wt = omega * t
    return (v_peak * math.sin(wt), v_peak * math.sin(wt - TWO_PI_3), v_peak * math.sin(wt + TWO_PI_3))


def step_boost(i_b: float, duty: float, v_pv: float, v_dc: float, dt: float, l_b: float) -> float:
    """Averaged boost inductor: ``L di/dt = v_pv - (1 - d) v_dc``, floored at 0."""
    if not 0.0 <= duty < 1.0:
        raise ValueError(f"duty {duty} outside [0, 1)")
    i_new = i_b + dt * ((v_pv - (1.0 - duty) * v_dc) / l_b)
    return i_new if i_new > 0.0 else 0.0


def step_dclink(v_dc: float, p_in: float, p_out: float, dt: float, c: float,
                v_min: float = 50.0, time: float | None = None) -> float:
    """Capacitor power balance ``C dv/dt = (p_in - p_out) / v_dc``."""
    if not v_dc > 0:
        raise PlantFault(f"DC link at {v_dc} V", time)
    v_new = v_dc + dt * ((p_in - p_out) / (c * v_dc))
    if v_new < v_min:
        raise PlantFault(f"DC link collapsed to {v_new:.3f} V", time)
    return v_new


def pole_voltages(legs, v_dc: float) -> tuple[float, float, float]:
    """Leg outputs of +-v_dc/2 with the common mode removed."""
    half = 0.5 * v_dc
    pa = half if legs[0] else -half
    pb = half if legs[1] else -half
    pc = half if legs[2] else -half
    cm = (pa + pb + pc) / 3.0
    return pa - cm, pb - cm, pc - cm


def step_vsc_currents(i_abc, legs, v_dc: float, v_pcc_abc, dt: float, l: float = 2.5e-3,
                      r: float = 0.05, i_fault: float = math.inf, time: float | None = None):
    """Interfacing inductors: ``L di/dt = v_pole - v_pcc - R i`` per phase."""
    poles = pole_voltages(legs, v_dc)
    out = tuple(i_abc[k] + dt * ((poles[k] - v_pcc_abc[k] - r * i_abc[k]) / l) for k in range(3))
    if max(abs(x) for x in out) > i_fault:
        raise PlantFault("VSC overcurrent", time)
    return out


def _share(e_sorted, r_f: float, i_dc: float):
    """Rail voltage and branch currents when ``i_dc`` is drawn from sources
    ``e_sorted`` (best first) through equal resistances ``r_f``."""
    m = len(e_sorted)
    total = 0.0
    rail = 0.0
    n = 0
    for n in range(1, m + 1):
        total += e_sorted[n - 1]
        rail = (total - r_f * i_dc) / n
        if n == m or rail >= e_sorted[n]:
            break
    return rail, n


def bridge_currents(e_abc, i_dc: float, r_f: float, open_phase: int = -1):
    """Line currents and rectified voltage of an ideal-diode bridge.

    ``e_abc`` are the Thevenin voltages of the PCC behind ``r_f``.  Returns
    ``(i_abc, v_rect)``.  With ``i_dc == 0`` the bridge draws nothing and
    ``v_rect`` is the open-circuit rail difference.
    """
    phases = [k for k in range(3) if k != open_phase]
    hi = sorted(phases, key=lambda k: (-e_abc[k], k))
    lo = sorted(phases, key=lambda k: (e_abc[k], k))
    v_p, n_p = _share([e_abc[k] for k in hi], r_f, i_dc)
    v_n, n_n = _share([-e_abc[k] for k in lo], r_f, i_dc)
    v_n = -v_n
    i = [0.0, 0.0, 0.0]
    for k in hi[:n_p]:
        i[k] += (e_abc[k] - v_p) / r_f
    for k in lo[:n_n]:
        i[k] -= (v_n - e_abc[k]) / r_f
    return tuple(i), v_p - v_n


def step_bridge(i_dc: float, v_rect: float, dt: float, r: float, l: float) -> float:
    """DC side of the bridge: ``L di/dt = v_rect - R i``, current floored at 0."""
    if l == 0.0:
        return max(v_rect / r, 0.0)
    i_new = i_dc + dt * ((v_rect - r * i_dc) / l)
    return i_new if i_new > 0.0 else 0.0


def bridge_load(v_abc, i_dc: float, cfg: LoadConfig, t: float, dt: float, r_f: float = 5.0):
    """One step of the RL-loaded diode bridge fed from ``v_abc`` behind ``r_f``.

    Returns ``(i_load_abc, new_i_dc)``.
    """
    i_abc, v_rect = bridge_currents(v_abc, i_dc, r_f, cfg.disconnected(t))
    return i_abc, step_bridge(i_dc, v_rect, dt, cfg.bridge_r, cfg.bridge_l)


def pcc_voltages(v_cf, i_g, i_vsc, i_load, r_f: float):
    return tuple(v_cf[k] + r_f * (i_g[k] + i_vsc[k] - i_load[k]) for k in range(3))
