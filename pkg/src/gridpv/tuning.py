"""Episode-level tuning of the VSC gains (kp, ki, band).

The cost of a gain set is the integrated tracking error of a short run,
``J = int |i_gref - i_g| dt + w * int |v_dcref - v_dc| dt``, summed over
the three phases.  Failed simulations cost infinity and are skipped by the
optimisers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .optim import Bounds, PsoParams, RoaParams, pso_minimize, roa_minimize
from .sim import SimTrace, SimulationFault, run_scenario

log = logging.getLogger(__name__)

Gains = tuple[float, float, float]


@dataclass(frozen=True)
class TuneResult:
    gains: Gains
    cost: float
    default_cost: float
    trace: list[float]
    evaluations: int
    method: str


def episode_cost(trace: SimTrace, dc_weight: float = 0.1) -> float:
    dt = trace.dt
    err_i = np.abs(trace.abc("i_gref") - trace.abc("i_g")).sum(axis=0)
    err_v = np.abs(trace["v_dcref"] - trace["v_dc"])
    # rectangle rule over the recorded steps, the initial sample excluded
    return float(np.sum(err_i[1:]) * dt + dc_weight * np.sum(err_v[1:]) * dt)


def gains_cost(cfg: ScenarioConfig, gains: Gains, episode: float | None = None) -> float:
    episode = cfg.tuning.episode if episode is None else episode
    try:
        tr = run_scenario(cfg, gains=tuple(float(g) for g in gains), duration=episode)
    except SimulationFault as exc:
        log.warning("gains %s rejected: %s", gains, exc)
        return math.inf
    return episode_cost(tr, cfg.tuning.dc_weight)


def _tune(cfg: ScenarioConfig, method: str, seed: int, bounds=None, params=None) -> TuneResult:
    c = cfg.control
    default = (c.kp, c.ki, c.band)
    t = cfg.tuning
    pairs = list(bounds) if bounds is not None else [t.kp, t.ki, t.band]
    if len(pairs) != 3:
        raise ValueError("need bounds for kp, ki and band")
    lo = np.array([float(a) for a, _ in pairs])
    hi = np.array([float(b) for _, b in pairs])
    if np.any(lo > hi):
        raise ValueError("every bound needs low <= high")
    j_default = gains_cost(cfg, default)
    free = lo < hi
    if not np.any(free):
        fixed = tuple(float(v) for v in lo)
        j_fixed = j_default if fixed == tuple(default) else gains_cost(cfg, fixed)
        return TuneResult(fixed, j_fixed, j_default, [j_fixed], 1, method)

    def full(xf: np.ndarray) -> Gains:
        g = lo.copy()
        g[free] = xf
        return tuple(float(v) for v in g)

    def objective(xf: np.ndarray) -> float:
        return gains_cost(cfg, full(xf))

    b = Bounds(lo[free], hi[free])
    d = np.array(default)
    start = [d[free]] if np.all((d >= lo) & (d <= hi)) else []
    if method == "roa":
        res = roa_minimize(objective, b, params or t.roa_params(seed), initial=start)
    else:
        res = pso_minimize(objective, b, params or PsoParams(population=t.population, max_iters=t.max_iters,
                                                             seed=seed), initial=start)
    if res.cost <= j_default:
        return TuneResult(full(res.x), res.cost, j_default, res.trace, res.evaluations + 1, method)
    # the defaults sit outside the bounds and beat everything inside them
    return TuneResult(tuple(default), j_default, j_default, res.trace, res.evaluations + 1, method)


def roa_tune(cfg: ScenarioConfig, seed: int | None = None, bounds=None, params: RoaParams | None = None) -> TuneResult:
    """Rain-optimiser search over (kp, ki, band); never worse than the defaults."""
    return _tune(cfg, "roa", cfg.seed if seed is None else seed, bounds, params)


def pso_tune(cfg: ScenarioConfig, seed: int | None = None, bounds=None, params: PsoParams | None = None) -> TuneResult:
    return _tune(cfg, "pso", cfg.seed if seed is None else seed, bounds, params)


def tuned_gains(cfg: ScenarioConfig) -> tuple[Gains, TuneResult | None]:
    """Gains the scenario asks for: defaults, or the result of its tuner."""
    c = cfg.control
    if c.tune == "none":
        return (c.kp, c.ki, c.band), None
    res = roa_tune(cfg) if c.tune == "roa" else pso_tune(cfg)
    return res.gains, res
