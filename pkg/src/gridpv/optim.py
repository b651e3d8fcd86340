"""Rain optimisation (ROA) and particle swarm minimisers over box bounds.

ROA keeps a population of drops, each a position plus a neighbourhood
radius.  Every iteration a drop probes both ends of its radius along each
coordinate in turn and moves downhill; touching drops merge into one larger
drop, drops that could not move lose radius to the soil, and drops whose
radius falls below a floor are absorbed.  Both optimisers work internally in
coordinates scaled to the unit box.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


class Bounds(NamedTuple):
    low: np.ndarray
    high: np.ndarray

    @classmethod
    def of(cls, pairs: Sequence[tuple[float, float]]) -> "Bounds":
        lo = np.array([float(p[0]) for p in pairs])
        hi = np.array([float(p[1]) for p in pairs])
        if lo.size == 0 or np.any(~(lo < hi)):
            raise ValueError("every bound needs low < high")
        return cls(lo, hi)

    @property
    def width(self) -> np.ndarray:
        return self.high - self.low

    def to_real(self, unit: np.ndarray) -> np.ndarray:
        return self.low + unit * self.width


class OptResult(NamedTuple):
    x: np.ndarray
    cost: float
    trace: list[float]
    evaluations: int


def merge_drops(r1: float, r2: float, n: int) -> float:
    """Radius of the drop formed when two drops of radius r1, r2 coalesce."""
    if r1 <= 0 or r2 < 0 or n < 1:
        raise ValueError("need r1 > 0, r2 >= 0, n >= 1")
    hi = max(r1, r2)
    # factor the larger radius out so large n cannot overflow
    return hi * ((r1 / hi) ** n + (r2 / hi) ** n) ** (1.0 / n)


def shrink_radius(r1: float, beta: float, n: int) -> float:
    """Radius left after soil absorption, ``(r1^n * beta)^(1/n)``."""
    if r1 <= 0 or not 0 < beta < 1:
        raise ValueError("need r1 > 0 and 0 < beta < 1")
    return r1 * beta ** (1.0 / n)


def fitness_transform(raw: float, penalty: float = 0.0) -> float:
    """Piecewise fitness map used when reporting costs.

    Negative raw values map through ``1 / (1 + raw)``; others through
    ``1 + |raw - penalty|``.  Selection never uses this.
    """
    if not math.isfinite(raw):
        raise ValueError("raw fitness must be finite")
    if raw < 0:
        if raw == -1.0:
            raise ValueError("raw fitness of -1 has no transform")
        return 1.0 / (1.0 + raw)
    return 1.0 + abs(raw - penalty)


@dataclass(frozen=True)
class RoaParams:
    population: int = 20
    init_radius_frac: float = 0.25
    beta: float = 0.8
    min_radius: float = 1e-6  # fraction of bound width
    max_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0 < self.beta < 1:
            raise ValueError("beta must be in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.init_radius_frac <= 0 or self.min_radius <= 0:
            raise ValueError("radii must be positive")


class _Evaluator:
    def __init__(self, objective: Objective, bounds: Bounds):
        self.objective = objective
        self.bounds = bounds
        self.count = 0
        self.best_x: np.ndarray | None = None
        self.best_cost = math.inf

    def __call__(self, unit: np.ndarray) -> float:
        x = self.bounds.to_real(unit)
        self.count += 1
        try:
            c = float(self.objective(x))
        except Exception as exc:  # objective failures only cost one candidate
            log.warning("objective raised at %s: %s", x, exc)
            return math.inf
        if not math.isfinite(c):
            log.warning("objective returned %r at %s; candidate rejected", c, x)
            return math.inf
        if c < self.best_cost:
            self.best_cost, self.best_x = c, x.copy()
        return c


def roa_minimize(
    objective: Objective,
    bounds: Bounds | Sequence[tuple[float, float]],
    params: RoaParams = RoaParams(),
    initial: Sequence[np.ndarray] = (),
) -> OptResult:
    """Minimise ``objective`` over ``bounds`` with the rain algorithm.

    ``initial`` positions (in real units) replace the first random drops.
    The returned trace holds the best cost after initialisation and after
    every iteration, so it never increases.
    """
    if not isinstance(bounds, Bounds):
        bounds = Bounds.of(bounds)
    n = len(bounds.low)
    rng = np.random.default_rng(params.seed)
    ev = _Evaluator(objective, bounds)

    pos = rng.uniform(0.0, 1.0, size=(params.population, n))
    for k, x0 in enumerate(list(initial)[: params.population]):
        pos[k] = np.clip((np.asarray(x0, float) - bounds.low) / bounds.width, 0.0, 1.0)
    radius = params.init_radius_frac * rng.uniform(0.5, 1.0, size=params.population)
    cost = np.array([ev(p) for p in pos])
    alive = list(range(params.population))
    trace = [ev.best_cost]

    for _ in range(params.max_iters):
        if not alive:
            break
        moved = {}
        for k in alive:
            improved = False
            for j in range(n):
                best_c, best_p = cost[k], None
                for sgn in (-1.0, 1.0):
                    cand = pos[k].copy()
                    cand[j] = min(max(cand[j] + sgn * radius[k], 0.0), 1.0)
                    if cand[j] == pos[k][j]:
                        continue
                    c = ev(cand)
                    if c < best_c:
                        best_c, best_p = c, cand
                if best_p is not None:
                    pos[k], cost[k] = best_p, best_c
                    improved = True
            moved[k] = improved

        # coalesce overlapping drops, better one survives
        alive.sort(key=lambda k: (cost[k], k))
        survivors: list[int] = []
        for k in alive:
            for s in survivors:
                if np.linalg.norm(pos[k] - pos[s]) < radius[k] + radius[s]:
                    radius[s] = merge_drops(radius[s], radius[k], n)
                    moved[s] = moved[s] or moved[k]
                    break
            else:
                survivors.append(k)
        alive = []
        for k in sorted(survivors):
            if not moved[k]:
                radius[k] = shrink_radius(radius[k], params.beta, n)
            if radius[k] >= params.min_radius:
                alive.append(k)
        trace.append(ev.best_cost)

    if ev.best_x is None:
        return OptResult(bounds.to_real(pos[0]), math.inf, trace, ev.count)
    return OptResult(ev.best_x, ev.best_cost, trace, ev.count)


@dataclass(frozen=True)
class PsoParams:
    population: int = 30
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    max_iters: int = 200
    seed: int = 0


def pso_minimize(
    objective: Objective,
    bounds: Bounds | Sequence[tuple[float, float]],
    params: PsoParams = PsoParams(),
    initial: Sequence[np.ndarray] = (),
) -> OptResult:
    """Global-best particle swarm with velocities clamped to the unit box."""
    if not isinstance(bounds, Bounds):
        bounds = Bounds.of(bounds)
    n = len(bounds.low)
    rng = np.random.default_rng(params.seed)
    ev = _Evaluator(objective, bounds)

    x = rng.uniform(0.0, 1.0, size=(params.population, n))
    for k, x0 in enumerate(list(initial)[: params.population]):
        x[k] = np.clip((np.asarray(x0, float) - bounds.low) / bounds.width, 0.0, 1.0)
    v = np.zeros_like(x)
    pbest = x.copy()
    pcost = np.array([ev(p) for p in x])
    g = int(np.argmin(pcost))
    trace = [ev.best_cost]
    for _ in range(params.max_iters):
        r1 = rng.uniform(size=x.shape)
        r2 = rng.uniform(size=x.shape)
        v = (params.inertia * v + params.cognitive * r1 * (pbest - x)
             + params.social * r2 * (pbest[g] - x))
        v = np.clip(v, -1.0, 1.0)
        x = np.clip(x + v, 0.0, 1.0)
        for k in range(params.population):
            c = ev(x[k])
            if c < pcost[k]:
                pcost[k], pbest[k] = c, x[k].copy()
        g = int(np.argmin(pcost))
        trace.append(ev.best_cost)
    if ev.best_x is None:
        return OptResult(bounds.to_real(x[0]), math.inf, trace, ev.count)
    return OptResult(ev.best_x, ev.best_cost, trace, ev.count)
