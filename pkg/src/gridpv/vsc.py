"""Grid-side VSC control: unit templates, DC-link PI, feed-forward, hysteresis.

All functions here are scalar and side-effect free except the two state
records, which the simulation loop owns.  The compiled kernel repeats the
same arithmetic inline; keep the operation order in step with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

V_DEAD = 1.0  # volts; below this the PCC is treated as lost


class GridLossError(RuntimeError):
    """PCC voltage amplitude fell below the dead-voltage floor."""


class UnitTemplates(NamedTuple):
    u_pa: float
    u_pb: float
    u_pc: float


class ReferenceFrame(NamedTuple):
    v_t: float
    i_gp: float
    i_gref_abc: tuple[float, float, float]


def phase_from_line(v_sab: float, v_sbc: float) -> tuple[float, float, float]:
    """Phase voltages of a three-wire system from two sensed line voltages."""
    v_sa = (2.0 * v_sab + v_sbc) / 3.0
    v_sb = (-v_sab + v_sbc) / 3.0
    v_sc = (-v_sab - 2.0 * v_sbc) / 3.0
    return v_sa, v_sb, v_sc


def pcc_amplitude(v_sa: float, v_sb: float, v_sc: float) -> float:
    """Instantaneous amplitude; equals the phase peak for a balanced set."""
    return math.sqrt(2.0 * (v_sa * v_sa + v_sb * v_sb + v_sc * v_sc) / 3.0)


def unit_templates(v_sa: float, v_sb: float, v_sc: float, v_t: float) -> UnitTemplates:
    if not v_t >= V_DEAD:
        raise GridLossError(f"PCC amplitude {v_t:.4g} V below {V_DEAD} V floor")
    return UnitTemplates(v_sa / v_t, v_sb / v_t, v_sc / v_t)


@dataclass
class PiState:
    """Incremental PI on the DC-link error.

    ``ki`` is the per-call integral coefficient.  Callers running at a fixed
    sample period Ts with a continuous gain Ki pass ``ki = Ki * Ts``.
    """

    kp: float = 4.8
    ki: float = 1.0
    i_loss: float = 0.0
    prev_err: float = 0.0
    limit: float = math.inf

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ValueError("PI gains must be non-negative")
        if not self.limit > 0:
            raise ValueError("anti-windup limit must be positive")


def loss_component(state: PiState, v_dcref: float, v_dc: float) -> float:
    """One PI step; mutates and returns ``state.i_loss``."""
    err = v_dcref - v_dc
    out = state.i_loss + state.kp * (err - state.prev_err) + state.ki * err
    state.i_loss = min(max(out, -state.limit), state.limit)
    state.prev_err = err
    return state.i_loss


def feedforward(p_pv: float, v_t: float) -> float:
    """PV feed-forward amplitude ``2P/(3 v_t)``."""
    if not v_t >= V_DEAD:
        raise GridLossError(f"PCC amplitude {v_t:.4g} V below {V_DEAD} V floor")
    return 2.0 * p_pv / (3.0 * v_t)


def feedforward_alt(p_pv: float, v_pa: float) -> float:
    """Alternate feed-forward ``2P/v_pA`` against the phase RMS voltage.

    Kept for comparison only.  With ``v_pa`` the phase RMS voltage it
    commands 3*sqrt(2) times the amplitude of :func:`feedforward`.
    """
    if not v_pa >= V_DEAD:
        raise GridLossError(f"phase voltage {v_pa:.4g} V below {V_DEAD} V floor")
    return 2.0 * p_pv / v_pa


def reference_currents(i_loss: float, i_pvf: float, templates: UnitTemplates) -> tuple[float, float, float]:
    i_gp = i_loss - i_pvf
    return i_gp * templates.u_pa, i_gp * templates.u_pb, i_gp * templates.u_pc


def reference_frame(v_sab: float, v_sbc: float, i_loss: float, p_pv: float) -> ReferenceFrame:
    """Full reference chain from sensed line voltages."""
    v = phase_from_line(v_sab, v_sbc)
    v_t = pcc_amplitude(*v)
    u = unit_templates(*v, v_t)
    i_pvf = feedforward(p_pv, v_t)
    return ReferenceFrame(v_t, i_loss - i_pvf, reference_currents(i_loss, i_pvf, u))


@dataclass
class HysteresisState:
    band: float = 0.25
    leg_states: list[bool] = field(default_factory=lambda: [False, False, False])

    def __post_init__(self):
        if not self.band > 0:
            raise ValueError("hysteresis band must be positive")
        if len(self.leg_states) != 3:
            raise ValueError("need three leg states")


def hysteresis_gate(i_abc, i_ref_abc, state: HysteresisState) -> list[bool]:
    """Two-level hysteresis: error above +band turns the upper switch on.

    The error is ``i_ref - i``; the sign convention of ``i`` is the caller's.
    """
    h = state.band
    for k in range(3):
        err = i_ref_abc[k] - i_abc[k]
        if err > h:
            state.leg_states[k] = True
        elif err < -h:
            state.leg_states[k] = False
    return state.leg_states
