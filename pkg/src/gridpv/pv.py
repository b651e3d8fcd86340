"""Static I-V model of a PV array built from single-diode modules.

Modules are described by their datasheet point set (V_oc, I_sc, V_mp, I_mp);
the five single-diode parameters are fitted once so those points are
reproduced at reference conditions.  Arrays are ``n_series`` modules per
string and ``n_parallel`` identical strings.  A string can be split into
sections that see different irradiance; each section carries one bypass
diode, which is what produces multiple P-V peaks under partial shading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize, special

BOLTZMANN = 1.380649e-23
CHARGE = 1.602176634e-19
BAND_GAP_EV = 1.12
BYPASS_DROP = 0.7
MAX_ITER = 100
KELVIN = 273.15


class PvModelError(RuntimeError):
    """The diode equation could not be solved for the given inputs."""


class PvConfigError(ValueError):
    pass


class DiodeParams(NamedTuple):
    """Fitted single-diode parameters at reference conditions."""

    i_ph: float
    i_0: float
    r_s: float
    r_sh: float
    a_ref: float  # ideality * cells * thermal voltage, volts


class OperatingPoint(NamedTuple):
    v: float
    i: float
    p: float


@dataclass(frozen=True)
class PvModuleParams:
    """Datasheet description of one module.

    Defaults are a 54-cell 200 W module (26.3 V / 7.61 A at MPP).  When
    ``r_series`` and ``r_shunt`` are left as ``None`` they are fitted
    together with the photocurrent and saturation current.
    """

    v_mp: float = 26.3
    i_mp: float = 7.61
    v_oc: float = 32.9
    i_sc: float = 8.21
    ideality: float = 1.3
    r_series: float | None = None
    r_shunt: float | None = None
    ref_irradiance: float = 1000.0
    ref_temp: float = 25.0
    n_cells: int = 54
    alpha_isc: float = 3.18e-3  # A/K

    def __post_init__(self):
        if not self.v_oc > self.v_mp > 0:
            raise PvConfigError(f"need v_oc > v_mp > 0, got v_oc={self.v_oc}, v_mp={self.v_mp}")
        if not self.i_sc > self.i_mp > 0:
            raise PvConfigError(f"need i_sc > i_mp > 0, got i_sc={self.i_sc}, i_mp={self.i_mp}")
        if self.r_series is not None and self.r_series < 0:
            raise PvConfigError("r_series must be >= 0")
        if self.r_shunt is not None and self.r_shunt <= 0:
            raise PvConfigError("r_shunt must be > 0")
        if self.ideality <= 0 or self.n_cells < 1:
            raise PvConfigError("ideality and n_cells must be positive")

    @property
    def diode(self) -> DiodeParams:
        return fit_single_diode(self)

    @property
    def p_mp(self) -> float:
        return self.v_mp * self.i_mp


def _thermal_a(params: PvModuleParams, t_c: float) -> float:
    return params.ideality * params.n_cells * BOLTZMANN * (t_c + KELVIN) / CHARGE


@lru_cache(maxsize=64)
def fit_single_diode(params: PvModuleParams) -> DiodeParams:
    """Fit (I_ph, I_0, R_s, R_sh) so the datasheet points hold at STC.

    Four conditions: I(0) = I_sc, I(V_oc) = 0, I(V_mp) = I_mp and
    dP/dV = 0 at V_mp.  If both resistances are supplied only the two
    current parameters are fitted, and the MPP is then checked instead of
    imposed.
    """
    a = _thermal_a(params, params.ref_temp)
    isc, voc, vmp, imp = params.i_sc, params.v_oc, params.v_mp, params.i_mp

    def residuals(i_ph, i_0, r_s, r_sh):
        e_sc = math.exp(isc * r_s / a)
        e_oc = math.exp(voc / a)
        e_mp = math.exp((vmp + imp * r_s) / a)
        f1 = i_ph - i_0 * (e_sc - 1.0) - isc * r_s / r_sh - isc
        f2 = i_ph - i_0 * (e_oc - 1.0) - voc / r_sh
        f3 = i_ph - i_0 * (e_mp - 1.0) - (vmp + imp * r_s) / r_sh - imp
        g = i_0 / a * e_mp + 1.0 / r_sh
        f4 = -g / (1.0 + r_s * g) + imp / vmp
        return f1, f2, f3, f4

    if params.r_series is not None and params.r_shunt is not None:
        r_s, r_sh = params.r_series, params.r_shunt

        def eqs(z):
            return residuals(z[0], math.exp(z[1]), r_s, r_sh)[:2]

        i0_guess = isc / math.exp(voc / a)
        sol, info, ier, msg = optimize.fsolve(eqs, [isc, math.log(i0_guess)], full_output=True, xtol=1e-13)
        i_ph, i_0 = sol[0], math.exp(sol[1])
    else:
        def eqs(z):
            f = residuals(z[0], math.exp(z[1]), z[2], math.exp(z[3]))
            return [f[0], f[1], f[2], f[3] * 10.0]

        i0_guess = isc / math.exp(voc / a)
        guess = [isc, math.log(i0_guess), 0.2, math.log(400.0)]
        sol, info, ier, msg = optimize.fsolve(eqs, guess, full_output=True, xtol=1e-13)
        if ier != 1 or sol[2] < 0:
            raise PvModelError(f"single-diode fit failed: {msg}")
        i_ph, i_0, r_s, r_sh = sol[0], math.exp(sol[1]), sol[2], math.exp(sol[3])

    fitted = DiodeParams(float(i_ph), float(i_0), float(r_s), float(r_sh), a)
    i_at_mp = _solve_current(_diode_at(params, fitted, params.ref_irradiance, params.ref_temp), vmp)
    if abs(i_at_mp - imp) > 0.005 * imp:
        raise PvConfigError(
            f"fitted model gives {i_at_mp:.4f} A at v_mp, more than 0.5% from i_mp={imp}"
        )
    return fitted


class _Diode(NamedTuple):
    i_ph: float
    i_0: float
    r_s: float
    r_sh: float
    a: float


def _diode_at(params: PvModuleParams, d: DiodeParams, g: float, t: float) -> _Diode:
    t_k, t_ref = t + KELVIN, params.ref_temp + KELVIN
    a = _thermal_a(params, t)
    i_ph = (d.i_ph + params.alpha_isc * (t - params.ref_temp)) * g / params.ref_irradiance
    eg = BAND_GAP_EV * CHARGE / (params.ideality * BOLTZMANN)
    i_0 = d.i_0 * (t_k / t_ref) ** 3 * math.exp(eg * (1.0 / t_ref - 1.0 / t_k))
    return _Diode(max(i_ph, 0.0), i_0, d.r_s, d.r_sh, a)


def _residual(dd: _Diode, v: float, i: float) -> tuple[float, float]:
    x = (v + i * dd.r_s) / dd.a
    if x > 700.0:
        return -math.inf, -math.inf
    e = math.exp(x)
    f = dd.i_ph - dd.i_0 * (e - 1.0) - (v + i * dd.r_s) / dd.r_sh - i
    df = -dd.i_0 * e * dd.r_s / dd.a - dd.r_s / dd.r_sh - 1.0
    return f, df


def _solve_current(dd: _Diode, v: float, tol: float = 1e-9) -> float:
    """Safeguarded Newton on the implicit diode equation, bisection fallback."""
    f0, _ = _residual(dd, v, 0.0)
    if f0 <= 0.0:
        return 0.0
    lo = 0.0
    hi = dd.i_ph + dd.i_0 + 1e-12
    x = min(dd.i_ph, hi)
    for _ in range(MAX_ITER):
        f, df = _residual(dd, v, x)
        if abs(f) < tol:
            return x
        if f > 0:
            lo = x
        else:
            hi = x
        step = x - f / df if math.isfinite(f) else math.nan
        x = step if lo < step < hi else 0.5 * (lo + hi)
    raise PvModelError(f"diode solve did not converge: v={v}, i_ph={dd.i_ph}, i_0={dd.i_0}")


def module_current(params: PvModuleParams, v: float, g: float, t: float = 25.0) -> float:
    """Module current at terminal voltage ``v`` (A), never negative.

    Strings carry blocking diodes, so a reverse (negative) current is
    reported as zero.
    """
    if v < 0 or g < 0:
        raise ValueError(f"need v >= 0 and g >= 0, got v={v}, g={g}")
    dd = _diode_at(params, params.diode, g, t)
    if dd.i_ph == 0.0:
        return 0.0
    return _solve_current(dd, float(v))


def module_voltage(params: PvModuleParams, i, g: float, t: float = 25.0):
    """Module voltage carrying current ``i`` (vectorised, closed form).

    Uses the Wright omega form of the Lambert-W solution, which stays finite
    for the large exponents met at realistic shunt resistances.  Currents
    above the photocurrent give negative (reverse-biased) voltages.
    """
    dd = _diode_at(params, params.diode, g, t)
    i = np.asarray(i, dtype=float)
    z = math.log(dd.i_0 * dd.r_sh / dd.a) + dd.r_sh * (dd.i_ph + dd.i_0 - i) / dd.a
    u = dd.r_sh * (dd.i_ph + dd.i_0 - i) - dd.a * np.real(special.wrightomega(z))
    return u - i * dd.r_s


@dataclass(frozen=True)
class Section:
    """Modules ``first..last`` (1-based, inclusive) of every string."""

    first: int
    last: int
    irradiance: float

    @property
    def count(self) -> int:
        return self.last - self.first + 1


@dataclass(frozen=True)
class PvArrayConfig:
    module: PvModuleParams = field(default_factory=PvModuleParams)
    n_series: int = 18
    n_parallel: int = 9
    sections: tuple[Section, ...] = ()
    temperature: float = 25.0

    def __post_init__(self):
        if self.n_series < 1 or self.n_parallel < 1:
            raise PvConfigError("n_series and n_parallel must be >= 1")
        if not self.sections:
            object.__setattr__(self, "sections", (Section(1, self.n_series, 1000.0),))
        object.__setattr__(self, "sections", tuple(self.sections))
        expect = 1
        for s in self.sections:
            if s.first != expect or s.last < s.first:
                raise PvConfigError(
                    f"sections must partition 1..{self.n_series} in order; bad span {s.first}..{s.last}"
                )
            if not 0.0 <= s.irradiance <= 1500.0:
                raise PvConfigError(f"irradiance {s.irradiance} outside [0, 1500] W/m2")
            expect = s.last + 1
        if expect != self.n_series + 1:
            raise PvConfigError(f"sections cover 1..{expect - 1}, expected 1..{self.n_series}")

    @property
    def rated_power(self) -> float:
        return self.n_series * self.n_parallel * self.module.p_mp

    def with_irradiance(self, levels: Sequence[float]) -> "PvArrayConfig":
        if len(levels) != len(self.sections):
            raise PvConfigError(f"expected {len(self.sections)} irradiance values, got {len(levels)}")
        secs = tuple(Section(s.first, s.last, float(g)) for s, g in zip(self.sections, levels))
        return PvArrayConfig(self.module, self.n_series, self.n_parallel, secs, self.temperature)

    def uniform(self, g: float) -> "PvArrayConfig":
        return PvArrayConfig(
            self.module, self.n_series, self.n_parallel, (Section(1, self.n_series, g),), self.temperature
        )


def string_voltage(cfg: PvArrayConfig, i):
    """Voltage of one string at string current ``i`` (vectorised)."""
    i = np.asarray(i, dtype=float)
    total = np.zeros_like(i)
    for s in cfg.sections:
        vs = s.count * module_voltage(cfg.module, i, s.irradiance, cfg.temperature)
        total += np.maximum(vs, -BYPASS_DROP)
    return total


def _current_ceiling(cfg: PvArrayConfig) -> float:
    top = 0.0
    for s in cfg.sections:
        dd = _diode_at(cfg.module, cfg.module.diode, s.irradiance, cfg.temperature)
        top = max(top, dd.i_ph + dd.i_0)
    return top + 1e-9


def open_circuit_voltage(cfg: PvArrayConfig) -> float:
    return max(float(string_voltage(cfg, 0.0)), 0.0)


def array_current(cfg: PvArrayConfig, v: float) -> float:
    """Array current (A) at terminal voltage ``v``."""
    if v < 0:
        raise ValueError(f"need v >= 0, got {v}")
    if v >= open_circuit_voltage(cfg):
        return 0.0
    hi = _current_ceiling(cfg)
    i_str = optimize.brentq(lambda i: float(string_voltage(cfg, i)) - v, 0.0, hi, xtol=1e-13, rtol=1e-15)
    return cfg.n_parallel * i_str


def array_current_vec(cfg: PvArrayConfig, v: np.ndarray, iters: int = 60) -> np.ndarray:
    """Vectorised array current by bisection on the string current."""
    v = np.asarray(v, dtype=float)
    lo = np.zeros_like(v)
    hi = np.full_like(v, _current_ceiling(cfg))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = string_voltage(cfg, mid) > v
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    out = cfg.n_parallel * 0.5 * (lo + hi)
    out[v >= open_circuit_voltage(cfg)] = 0.0
    return out


def pv_sweep(cfg: PvArrayConfig, dv: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    v_oc = open_circuit_voltage(cfg)
    v = np.arange(0.0, v_oc + dv, dv)
    return v, v * array_current_vec(cfg, v)


@lru_cache(maxsize=32)
def true_mpp(cfg: PvArrayConfig, dv: float = 0.01) -> OperatingPoint:
    """Global maximum power point: dense sweep, then golden-section refine."""
    v, p = pv_sweep(cfg, dv)
    k = int(np.argmax(p))
    if p[k] <= 0.0:
        return OperatingPoint(0.0, 0.0, 0.0)
    if 0 < k < len(v) - 1 and p[k] > p[k - 1] and p[k] > p[k + 1]:
        res = optimize.minimize_scalar(
            lambda x: -x * array_current(cfg, x),
            bracket=(v[k - 1], v[k], v[k + 1]),
            method="golden",
            tol=1e-10,
        )
        vm = float(res.x)
    else:
        vm = float(v[k])
    im = array_current(cfg, vm)
    return OperatingPoint(vm, im, vm * im)


@dataclass(frozen=True)
class PvCurve:
    """Uniform-voltage lookup table of the array I-V curve."""

    dv: float
    current: np.ndarray

    @property
    def v_oc(self) -> float:
        return self.dv * (len(self.current) - 1)

    def __call__(self, v: float) -> float:
        return interp_curve(self.current, self.dv, v)


def interp_curve(table, dv: float, v: float) -> float:
    if v <= 0.0:
        return table[0]
    x = v / dv
    k = int(x)
    if k >= len(table) - 1:
        return 0.0
    frac = x - k
    return table[k] + frac * (table[k + 1] - table[k])


@lru_cache(maxsize=32)
def build_curve(cfg: PvArrayConfig, dv: float = 0.01) -> PvCurve:
    v_oc = open_circuit_voltage(cfg)
    n = int(math.ceil(v_oc / dv)) + 1
    v = np.arange(n) * dv
    cur = array_current_vec(cfg, v)
    cur[-1] = 0.0
    return PvCurve(dv, np.ascontiguousarray(cur))
