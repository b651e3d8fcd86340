"""Boost-stage maximum power point tracking.

Three trackers share one state record:

* ``anfis``  - incremental-conductance direction, step size from a trained
  neuro-fuzzy network fed with the sensed PV current and voltage;
* ``po``     - fixed-step perturb and observe on the duty cycle;
* ``vdcref`` - the DC-link reference itself is perturbed (single-stage
  flavour); the boost runs at a fixed ratio so the PV voltage follows it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .anfis import AnfisError, AnfisNet, TrainingSet, hybrid_train
from .pv import PvArrayConfig, array_current, array_current_vec, open_circuit_voltage

DUTY_MAX = 0.95
EPS_MPP = 1e-3  # siemens


class Direction(enum.Enum):
    """Which way the boost duty cycle should move."""

    DECREASE = -1
    HOLD = 0
    INCREASE = 1


def mpp_direction(dv: float, di: float, v: float, i: float, eps: float = EPS_MPP) -> Direction:
    """Incremental-conductance decision.

    Left of the MPP (dI/dV > -I/V) the PV voltage must rise, i.e. the duty
    must fall.  With no voltage change the sign of the current change
    decides.  ``|dI/dV + I/V| <= eps`` counts as being at the MPP.
    """
    if v <= 0:
        raise ValueError(f"need v > 0, got {v}")
    if dv == 0.0:
        if di > 0:
            return Direction.DECREASE
        if di < 0:
            return Direction.INCREASE
        return Direction.HOLD
    mismatch = di / dv + i / v
    if abs(mismatch) <= eps:
        return Direction.HOLD
    return Direction.DECREASE if mismatch > 0 else Direction.INCREASE


def dcref_floor(v_pa: float, gamma: float) -> float:
    """Lowest usable DC-link reference, ``gamma * sqrt(2) * v_pa``."""
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return gamma * math.sqrt(2.0) * v_pa


@dataclass
class MpptState:
    duty: float = 0.2
    prev_v: float = 0.0
    prev_i: float = 0.0
    prev_p: float = 0.0
    v_dcref: float = 700.0
    step: float = 1.0
    delta_d: float = 0.005
    dc_min: float = 700.0
    dc_max: float = 800.0
    eps: float = EPS_MPP
    max_step: float = 0.05
    last_sign: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.duty <= DUTY_MAX:
            raise ValueError(f"duty {self.duty} outside [0, {DUTY_MAX}]")
        if self.step <= 0 or self.delta_d <= 0:
            raise ValueError("step and delta_d must be positive")
        if self.dc_min > self.dc_max:
            raise ValueError("dc_min must not exceed dc_max")
        self.v_dcref = min(max(self.v_dcref, self.dc_min), self.dc_max)


def _clamp_duty(d: float) -> float:
    return min(max(d, 0.0), DUTY_MAX)


def perturb_vdcref(state: MpptState, dv: float, di: float, v: float, i: float) -> float:
    """Next DC-link reference from the six-case perturbation table."""
    direction = mpp_direction(dv, di, v, i, state.eps)
    ref = state.v_dcref
    if direction is Direction.DECREASE:
        ref += state.step
    elif direction is Direction.INCREASE:
        ref -= state.step
    return min(max(ref, state.dc_min), state.dc_max)


def anfis_duty(net: AnfisNet, i_pv: float, v_pv: float, state: MpptState) -> float:
    """Duty update: direction from incremental conductance, size from the net.

    Mutates ``state`` (previous sample and duty) and returns the new duty.
    """
    if not net.trained:
        raise AnfisError("MPPT network has not been trained")
    if v_pv <= 0:
        direction = Direction.DECREASE
    elif i_pv <= 0:
        # open circuit: no current change to read, pull the voltage down
        direction = Direction.INCREASE
    else:
        direction = mpp_direction(v_pv - state.prev_v, i_pv - state.prev_i, v_pv, i_pv, state.eps)
    size = min(abs(float(net(i_pv, v_pv))), state.max_step)
    state.duty = _clamp_duty(state.duty + direction.value * size)
    state.prev_v, state.prev_i, state.prev_p = v_pv, i_pv, v_pv * i_pv
    return state.duty


def po_baseline(state: MpptState, v: float, i: float, p_prev: float | None = None) -> float:
    """Classic perturb and observe with a fixed duty step."""
    p = v * i
    if p_prev is None:
        p_prev = state.prev_p
    if p < p_prev:
        state.last_sign = -state.last_sign
    state.duty = _clamp_duty(state.duty + state.last_sign * state.delta_d)
    state.prev_v, state.prev_i, state.prev_p = v, i, p
    return state.duty


def vdcref_update(state: MpptState, v: float, i: float) -> float:
    if v > 0:
        state.v_dcref = perturb_vdcref(state, v - state.prev_v, i - state.prev_i, v, i)
    state.prev_v, state.prev_i, state.prev_p = v, i, v * i
    return state.v_dcref


# -- teacher data -----------------------------------------------------------

def _inc_cond_converged_duty(cfg: PvArrayConfig, v_dc: float, d0: float, delta: float, steps: int) -> float:
    """Run the fixed-step incremental-conductance rule on the static curve."""
    d = d0
    v_prev = i_prev = 0.0
    tail = []
    for k in range(steps):
        v = (1.0 - d) * v_dc
        i = array_current(cfg, max(v, 0.0))
        direction = mpp_direction(v - v_prev, i - i_prev, v, i) if v > 0 else Direction.DECREASE
        if i <= 0.0:
            direction = Direction.INCREASE
        d = _clamp_duty(d + direction.value * delta)
        v_prev, i_prev = v, i
        if k >= steps - 20:
            tail.append(d)
    return float(np.mean(tail))


def teacher_label(distance: float, gain: float = 0.25, d_min: float = 0.001, d_max: float = 0.05) -> np.ndarray:
    """Step size wanted at a given duty distance from the tracked optimum."""
    span = d_max - d_min
    return d_min + span * np.tanh(gain * np.abs(distance) / span)


def teacher_dataset(
    cfg: PvArrayConfig | None = None,
    v_dc: float = 700.0,
    irradiances=tuple(range(200, 1001, 50)),
    n_points: int = 40,
    delta: float = 0.0025,
    seed: int = 0,
) -> TrainingSet:
    """(I_pv, V_pv) -> step-size samples harvested from incremental-conductance runs.

    For each uniform irradiance the fixed-step rule is run on the static
    curve until it dithers; the mean of its final duties is the tracked
    optimum.  Points along the curve are labelled by their duty distance
    to that optimum through :func:`teacher_label`.
    """
    cfg = cfg or PvArrayConfig()
    rng = np.random.default_rng(seed)
    xs, ys, ts = [], [], []
    for g in irradiances:
        c = cfg.uniform(float(g))
        d_opt = _inc_cond_converged_duty(c, v_dc, 0.15, delta, 400)
        v_oc = open_circuit_voltage(c)
        v = np.sort(rng.uniform(0.45 * v_oc, 0.995 * v_oc, n_points))
        i = array_current_vec(c, v)
        d = 1.0 - v / v_dc
        xs.append(i)
        ys.append(v)
        ts.append(teacher_label(d - d_opt))
    return TrainingSet(np.concatenate(xs), np.concatenate(ys), np.concatenate(ts))


def train_mppt_net(data: TrainingSet, epochs: int = 50, lr: float = 0.01, n_mf: int = 3):
    net = AnfisNet.grid_init(
        (float(data.x.min()), float(data.x.max())), (float(data.y.min()), float(data.y.max())), n_mf, n_mf
    )
    return hybrid_train(net, data, epochs=epochs, lr=lr)


@lru_cache(maxsize=4)
def default_mppt_net(v_dc: float = 700.0) -> AnfisNet:
    net, _ = train_mppt_net(teacher_dataset(v_dc=v_dc))
    return net
