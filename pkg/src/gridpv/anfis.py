"""Two-input first-order Sugeno neuro-fuzzy network.

Premises are two-parameter bell functions ``1 / (1 + ((x - d) / a)^2)``,
rules are the full grid of (input-1 MF, input-2 MF) pairs combined with the
product T-norm, and each rule carries a linear consequent ``p*x + q*y + r``.
Training is the usual hybrid scheme: a least-squares solve for the
consequents with premises frozen, then a gradient step on the premises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np


class AnfisError(ValueError):
    pass


class BellMf(NamedTuple):
    a: float  # width
    d: float  # centre


def membership(mf: BellMf, x):
    u = (np.asarray(x, dtype=float) - mf.d) / mf.a
    out = 1.0 / (1.0 + u * u)
    return float(out) if out.ndim == 0 else out


@dataclass
class AnfisNet:
    """Premise widths/centres per input plus an (n_rules, 3) consequent table.

    Rule ``k`` pairs x-MF ``k // n_y`` with y-MF ``k % n_y``.
    """

    a_x: np.ndarray
    d_x: np.ndarray
    a_y: np.ndarray
    d_y: np.ndarray
    consequents: np.ndarray
    trained: bool = False

    def __post_init__(self):
        self.a_x = np.asarray(self.a_x, dtype=float).copy()
        self.d_x = np.asarray(self.d_x, dtype=float).copy()
        self.a_y = np.asarray(self.a_y, dtype=float).copy()
        self.d_y = np.asarray(self.d_y, dtype=float).copy()
        self.consequents = np.asarray(self.consequents, dtype=float).reshape(-1, 3).copy()
        if self.a_x.shape != self.d_x.shape or self.a_y.shape != self.d_y.shape:
            raise AnfisError("width and centre arrays must match per input")
        if self.consequents.shape[0] != self.n_rules:
            raise AnfisError(f"need {self.n_rules} consequent rows, got {self.consequents.shape[0]}")
        if np.any(self.a_x <= 0) or np.any(self.a_y <= 0):
            raise AnfisError("bell widths must be positive")

    @property
    def n_rules(self) -> int:
        return len(self.a_x) * len(self.a_y)

    @property
    def mfs_x(self) -> list[BellMf]:
        return [BellMf(a, d) for a, d in zip(self.a_x, self.d_x)]

    @property
    def mfs_y(self) -> list[BellMf]:
        return [BellMf(a, d) for a, d in zip(self.a_y, self.d_y)]

    @property
    def rules(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(len(self.a_x)) for j in range(len(self.a_y))]

    def copy(self) -> "AnfisNet":
        return AnfisNet(self.a_x, self.d_x, self.a_y, self.d_y, self.consequents, self.trained)

    @classmethod
    def grid_init(cls, x_range, y_range, n_x: int = 3, n_y: int = 3) -> "AnfisNet":
        """Centres evenly spread over each range, widths half the spacing."""
        def axis(lo, hi, n):
            if n == 1:
                return np.array([max(hi - lo, 1e-9)]), np.array([0.5 * (lo + hi)])
            d = np.linspace(lo, hi, n)
            return np.full(n, 0.5 * (d[1] - d[0])), d

        a_x, d_x = axis(*x_range, n_x)
        a_y, d_y = axis(*y_range, n_y)
        return cls(a_x, d_x, a_y, d_y, np.zeros((n_x * n_y, 3)))

    def __call__(self, x, y):
        return forward(self, x, y)

    # plain-text parameter file: one "key v1 v2 ..." line per field, in the
    # order n_x, n_y, a_x, d_x, a_y, d_y, then one "rule p q r" line per rule
    def save(self, path) -> None:
        lines = [
            f"n_x {len(self.a_x)}",
            f"n_y {len(self.a_y)}",
            "a_x " + " ".join(repr(float(v)) for v in self.a_x),
            "d_x " + " ".join(repr(float(v)) for v in self.d_x),
            "a_y " + " ".join(repr(float(v)) for v in self.a_y),
            "d_y " + " ".join(repr(float(v)) for v in self.d_y),
        ]
        lines += ["rule " + " ".join(repr(float(v)) for v in row) for row in self.consequents]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "AnfisNet":
        fields: dict[str, list[float]] = {}
        rules = []
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                vals = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise AnfisError(f"{path}:{lineno}: bad number ({exc})") from None
            if parts[0] == "rule":
                rules.append(vals)
            else:
                fields[parts[0]] = vals
        try:
            net = cls(fields["a_x"], fields["d_x"], fields["a_y"], fields["d_y"], np.array(rules))
        except KeyError as exc:
            raise AnfisError(f"{path}: missing field {exc}") from None
        net.trained = True
        return net


def _memberships(net: AnfisNet, x, y):
    ux = (x[:, None] - net.d_x[None, :]) / net.a_x[None, :]
    uy = (y[:, None] - net.d_y[None, :]) / net.a_y[None, :]
    return ux, 1.0 / (1.0 + ux * ux), uy, 1.0 / (1.0 + uy * uy)


def firing_strengths(net: AnfisNet, x, y) -> np.ndarray:
    """Product T-norm strengths, shape ``(n_rules,)`` or ``(n, n_rules)``."""
    xa, ya = np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))
    _, mx, _, my = _memberships(net, xa, ya)
    w = (mx[:, :, None] * my[:, None, :]).reshape(len(xa), -1)
    return w[0] if np.ndim(x) == 0 else w


def normalize(strengths) -> np.ndarray:
    w = np.asarray(strengths, dtype=float)
    total = w.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise AnfisError("all firing strengths are zero; input is degenerate")
    return w / total


def forward(net: AnfisNet, x, y):
    xa, ya = np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))
    wbar = normalize(firing_strengths(net, xa, ya))
    c = net.consequents
    f_rule = c[None, :, 0] * xa[:, None] + c[None, :, 1] * ya[:, None] + c[None, :, 2]
    out = np.sum(wbar * f_rule, axis=1)
    return float(out[0]) if np.ndim(x) == 0 and np.ndim(y) == 0 else out


class Gradients(NamedTuple):
    a_x: np.ndarray
    d_x: np.ndarray
    a_y: np.ndarray
    d_y: np.ndarray
    consequents: np.ndarray


def gradients(net: AnfisNet, x: float, y: float) -> Gradients:
    """Analytic derivative of the network output w.r.t. every parameter."""
    xa, ya = np.array([x], float), np.array([y], float)
    ux, mx, uy, my = _memberships(net, xa, ya)
    ux, mx, uy, my = ux[0], mx[0], uy[0], my[0]
    n_x, n_y = len(mx), len(my)
    w = (mx[:, None] * my[None, :]).reshape(-1)
    s = w.sum()
    wbar = w / s
    c = net.consequents
    f_rule = c[:, 0] * x + c[:, 1] * y + c[:, 2]
    f = float(np.dot(wbar, f_rule))
    df_dw = ((f_rule - f) / s).reshape(n_x, n_y)

    # d mu / d d = 2 u mu^2 / a ;  d mu / d a = 2 u^2 mu^2 / a
    df_dmx = df_dw @ my
    df_dmy = mx @ df_dw
    g_dx = df_dmx * 2.0 * ux * mx**2 / net.a_x
    g_ax = df_dmx * 2.0 * ux**2 * mx**2 / net.a_x
    g_dy = df_dmy * 2.0 * uy * my**2 / net.a_y
    g_ay = df_dmy * 2.0 * uy**2 * my**2 / net.a_y
    g_c = np.stack([wbar * x, wbar * y, wbar], axis=1)
    return Gradients(g_ax, g_dx, g_ay, g_dy, g_c)


def gradient_check(net: AnfisNet, x: float, y: float, rel_h: float = 1e-6) -> float:
    """Worst relative gap between analytic and central-difference gradients."""
    analytic = gradients(net, x, y)
    worst = 0.0
    for name in Gradients._fields:
        arr = getattr(net, name)
        g_an = getattr(analytic, name)
        flat = arr.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            h = rel_h * max(abs(orig), 1.0)
            flat[k] = orig + h
            f_plus = forward(net, x, y)
            flat[k] = orig - h
            f_minus = forward(net, x, y)
            flat[k] = orig
            g_fd = (f_plus - f_minus) / (2.0 * h)
            g = g_an.reshape(-1)[k]
            # rounding noise of the difference quotient sets the floor
            floor = 1e-7 * max(abs(f_plus), abs(f_minus), 1.0) / max(abs(orig), 1.0)
            err = abs(g - g_fd) / max(abs(g), abs(g_fd), floor)
            worst = max(worst, err)
    return worst


@dataclass
class TrainingSet:
    x: np.ndarray
    y: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.target = np.asarray(self.target, dtype=float)
        if not (self.x.shape == self.y.shape == self.target.shape) or self.x.ndim != 1:
            raise AnfisError("x, y and target must be equal-length 1-D arrays")
        if self.x.size == 0:
            raise AnfisError("training set is empty")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.target))):
            raise AnfisError("training set contains non-finite values")

    @classmethod
    def from_samples(cls, samples: Iterable[tuple[float, float, float]]) -> "TrainingSet":
        arr = np.asarray(list(samples), dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def __len__(self) -> int:
        return self.x.size

    def save_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.x, self.y, self.target]), delimiter=",",
                   header="x,y,target", comments="", fmt="%.17g")

    @classmethod
    def load_csv(cls, path) -> "TrainingSet":
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])


@dataclass
class TrainingTrace:
    """``rmse[0]`` is the untrained network; ``rmse[k]`` follows epoch k."""

    rmse: list[float] = field(default_factory=list)
    lse_rmse: list[float] = field(default_factory=list)
    pre_lse_rmse: list[float] = field(default_factory=list)
    rank_deficient: list[bool] = field(default_factory=list)
    learning_rate: list[float] = field(default_factory=list)


def rmse(net: AnfisNet, data: TrainingSet) -> float:
    err = forward(net, data.x, data.y) - data.target
    return float(np.sqrt(np.mean(err * err)))


def _lse_pass(net: AnfisNet, data: TrainingSet) -> bool:
    wbar = normalize(firing_strengths(net, data.x, data.y))
    design = np.concatenate(
        [wbar * data.x[:, None], wbar * data.y[:, None], wbar], axis=1
    )
    coef, _, rank, _ = np.linalg.lstsq(design, data.target, rcond=None)
    n = net.n_rules
    net.consequents = np.stack([coef[:n], coef[n:2 * n], coef[2 * n:]], axis=1)
    return rank < design.shape[1]


def _premise_gradient(net: AnfisNet, data: TrainingSet):
    """Gradient of mean squared error w.r.t. (a_x, d_x, a_y, d_y), batched."""
    x, y = data.x, data.y
    ux, mx, uy, my = _memberships(net, x, y)
    n_x, n_y = mx.shape[1], my.shape[1]
    w = (mx[:, :, None] * my[:, None, :]).reshape(len(x), -1)
    s = w.sum(axis=1, keepdims=True)
    c = net.consequents
    f_rule = c[None, :, 0] * x[:, None] + c[None, :, 1] * y[:, None] + c[None, :, 2]
    f = np.sum(w * f_rule, axis=1, keepdims=True) / s
    err = f[:, 0] - data.target
    df_dw = ((f_rule - f) / s).reshape(len(x), n_x, n_y)
    df_dmx = np.einsum("nij,nj->ni", df_dw, my)
    df_dmy = np.einsum("nij,ni->nj", df_dw, mx)
    scale = 2.0 * err[:, None] / len(x)
    g_dx = np.sum(scale * df_dmx * 2.0 * ux * mx**2, axis=0) / net.a_x
    g_ax = np.sum(scale * df_dmx * 2.0 * ux**2 * mx**2, axis=0) / net.a_x
    g_dy = np.sum(scale * df_dmy * 2.0 * uy * my**2, axis=0) / net.a_y
    g_ay = np.sum(scale * df_dmy * 2.0 * uy**2 * my**2, axis=0) / net.a_y
    return g_ax, g_dx, g_ay, g_dy


def hybrid_train(
    net: AnfisNet,
    data: TrainingSet,
    epochs: int = 50,
    lr: float = 0.01,
    premise_updates: bool = True,
) -> tuple[AnfisNet, TrainingTrace]:
    """Hybrid least-squares / gradient-descent training.

    Each epoch solves the consequents exactly with premises frozen, then
    takes one gradient step on the bell parameters, measured in units of
    each input's data span so ``lr`` does not depend on signal scale.  The step size is halved
    whenever an epoch ends with a higher error than the previous one, and
    that step is undone.  Widths are kept strictly positive.
    """
    if epochs < 1:
        raise AnfisError("epochs must be >= 1")
    if lr <= 0:
        raise AnfisError("learning rate must be positive")
    net = net.copy()
    span_x = max(float(np.ptp(data.x)), 1e-12)
    span_y = max(float(np.ptp(data.y)), 1e-12)
    trace = TrainingTrace()
    trace.rmse.append(rmse(net, data))
    for _ in range(epochs):
        trace.pre_lse_rmse.append(rmse(net, data))
        trace.rank_deficient.append(_lse_pass(net, data))
        after_lse = rmse(net, data)
        trace.lse_rmse.append(after_lse)
        if premise_updates:
            saved = (net.a_x.copy(), net.d_x.copy(), net.a_y.copy(), net.d_y.copy())
            g_ax, g_dx, g_ay, g_dy = _premise_gradient(net, data)
            # step taken in span-normalised coordinates
            kx, ky = lr * span_x**2, lr * span_y**2
            net.a_x = np.maximum(net.a_x - kx * g_ax, 1e-6 * saved[0])
            net.d_x = net.d_x - kx * g_dx
            net.a_y = np.maximum(net.a_y - ky * g_ay, 1e-6 * saved[2])
            net.d_y = net.d_y - ky * g_dy
            after_gd = rmse(net, data)
            if not math.isfinite(after_gd) or after_gd > after_lse:
                net.a_x, net.d_x, net.a_y, net.d_y = saved
                lr *= 0.5
        trace.learning_rate.append(lr)
        trace.rmse.append(rmse(net, data))
    net.trained = True
    return net, trace
