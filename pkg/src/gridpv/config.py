"""Scenario configuration: TOML schema, defaults and validation.

Sections mirror the package modules.  Every key is optional; an empty file
gives the documented defaults.  Validation errors carry the dotted field
path, parse errors the line number reported by the TOML reader.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .optim import RoaParams
from .plant import GridParams, LoadConfig, PlantParams
from .pv import PvArrayConfig, PvConfigError, PvModuleParams, Section

BUNDLED = ("case1", "case2", "case3")
PHASES = {"a": 0, "b": 1, "c": 2}


class ConfigError(ValueError):
    """Scenario file could not be read, parsed or validated."""


@dataclass(frozen=True)
class MpptConfig:
    method: str = "anfis"  # anfis | po | vdcref
    period: float = 10e-3
    initial_duty: float = 0.2
    delta_d: float = 0.005
    max_step: float = 0.05
    sensor_noise: float = 0.0  # relative standard deviation
    network: str = ""  # parameter file; empty means the built-in teacher-trained net
    eps: float = 1e-3  # incremental-conductance hold tolerance, siemens
    vref_step: float = 1.0  # volts per update on the vdcref path
    gamma: float = 1.1928  # DC-link floor multiple of sqrt(2) * line RMS voltage
    dc_max: float = 800.0


@dataclass(frozen=True)
class ControlConfig:
    kp: float = 4.8
    ki: float = 1.0  # A per V per s
    band: float = 0.25
    sample_time: float = 20e-6
    v_dcref: float = 700.0
    dc_filter_window: float = 10e-3
    feedforward: str = "power"  # power | phase-rms
    anti_windup: float = 1.5  # multiple of the rated grid current amplitude
    tune: str = "none"  # none | roa | pso


@dataclass(frozen=True)
class TuningConfig:
    episode: float = 0.1
    population: int = 6
    max_iters: int = 4
    beta: float = 0.8
    init_radius_frac: float = 0.25
    kp: tuple[float, float] = (1.0, 10.0)
    ki: tuple[float, float] = (0.1, 5.0)
    band: tuple[float, float] = (0.1, 1.0)
    dc_weight: float = 0.1

    def roa_params(self, seed: int) -> RoaParams:
        return RoaParams(population=self.population, init_radius_frac=self.init_radius_frac,
                         beta=self.beta, max_iters=self.max_iters, seed=seed)


@dataclass(frozen=True)
class AnalysisConfig:
    thd_cycles: int = 5
    max_order: int = 50
    settle: float = 0.2  # s excluded after start and after each disturbance edge
    track_band: float = 0.02


@dataclass(frozen=True)
class IrradianceStep:
    t: float
    levels: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    duration: float = 0.6
    step: float = 10e-6
    seed: int = 0
    array: PvArrayConfig = field(default_factory=PvArrayConfig)
    schedule: tuple[IrradianceStep, ...] = (IrradianceStep(0.0, (1000.0,)),)
    grid: GridParams = field(default_factory=GridParams)
    load: LoadConfig = field(default_factory=LoadConfig)
    plant: PlantParams = field(default_factory=PlantParams)
    control: ControlConfig = field(default_factory=ControlConfig)
    mppt: MpptConfig = field(default_factory=MpptConfig)
    tuning: TuningConfig = field(default_factory=TuningConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    def __post_init__(self):
        validate(self)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.step))

    @property
    def ctrl_every(self) -> int:
        return int(round(self.control.sample_time / self.step))

    def array_at(self, t: float) -> PvArrayConfig:
        """Array configuration with the irradiance in force at time t."""
        levels = self.schedule[0].levels
        for s in self.schedule:
            if s.t <= t:
                levels = s.levels
        return self.array.with_irradiance(levels)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def validate(cfg: ScenarioConfig) -> None:
    if not cfg.step > 0 or cfg.step > 20e-6 * (1 + 1e-9):
        _fail("plant-sim.step", f"must be in (0, 2e-05] s, got {cfg.step!r}")
    if not cfg.duration >= 5.0 / cfg.grid.freq - 1e-12:
        _fail("plant-sim.duration", f"must cover at least 5 fundamental cycles, got {cfg.duration!r}")
    c = cfg.control
    ratio = c.sample_time / cfg.step
    if not c.sample_time > 0 or abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
        _fail("vsc-control.sample_time", "must be a positive whole multiple of plant-sim.step")
    if c.kp < 0 or c.ki < 0:
        _fail("vsc-control.kp", "PI gains must be >= 0")
    if not c.band > 0:
        _fail("vsc-control.band", "must be > 0")
    if not c.v_dcref > 0:
        _fail("vsc-control.v_dcref", "must be > 0")
    if not c.dc_filter_window >= c.sample_time:
        _fail("vsc-control.dc_filter_window", "must be at least one control sample")
    if c.feedforward not in ("power", "phase-rms"):
        _fail("vsc-control.feedforward", "must be 'power' or 'phase-rms'")
    if not c.anti_windup > 0:
        _fail("vsc-control.anti_windup", "must be > 0")
    if c.tune not in ("none", "roa", "pso"):
        _fail("vsc-control.tune", "must be 'none', 'roa' or 'pso'")
    m = cfg.mppt
    if m.method not in ("anfis", "po", "vdcref"):
        _fail("mppt.method", "must be 'anfis', 'po' or 'vdcref'")
    if not m.eps >= 0 or not m.vref_step > 0:
        _fail("mppt.eps", "need eps >= 0 and vref_step > 0")
    if m.gamma < 1:
        _fail("mppt.gamma", "must be >= 1")
    ratio = m.period / cfg.step
    if not m.period > 0 or abs(ratio - round(ratio)) > 1e-6:
        _fail("mppt.period", "must be a positive whole multiple of plant-sim.step")
    if not 0.0 <= m.initial_duty < 0.95:
        _fail("mppt.initial_duty", "must be in [0, 0.95)")
    if not m.delta_d > 0 or not m.max_step > 0:
        _fail("mppt.delta_d", "step sizes must be > 0")
    if m.sensor_noise < 0:
        _fail("mppt.sensor_noise", "must be >= 0")
    if not cfg.schedule:
        _fail("pv-array.irradiance", "needs at least one entry")
    if cfg.schedule[0].t != 0.0:
        _fail("pv-array.irradiance[0].t", "first entry must start at t = 0")
    for k, s in enumerate(cfg.schedule):
        if k and not s.t > cfg.schedule[k - 1].t:
            _fail(f"pv-array.irradiance[{k}].t", "times must be strictly ascending")
        if len(s.levels) != len(cfg.array.sections):
            _fail(f"pv-array.irradiance[{k}].levels", f"need {len(cfg.array.sections)} levels, one per section")
        try:
            cfg.array.with_irradiance(s.levels)
        except PvConfigError as exc:
            _fail(f"pv-array.irradiance[{k}].levels", str(exc))
    t = cfg.tuning
    for name in ("kp", "ki", "band"):
        lo, hi = getattr(t, name)
        if not lo <= hi:
            _fail(f"optimizers.{name}", "bound needs low <= high")
    if not t.episode > 0 or t.episode >= 0.2:
        _fail("optimizers.episode", "tuning episode must be in (0, 0.2) s")
    if t.population < 2 or t.max_iters < 1:
        _fail("optimizers.population", "need population >= 2 and max_iters >= 1")
    if cfg.analysis.thd_cycles < 1 or cfg.analysis.max_order < 2:
        _fail("analysis.thd_cycles", "need at least one cycle and max_order >= 2")


# -- TOML mapping ------------------------------------------------------------

def _take(table: dict, path: str, cls, rename: dict | None = None, convert: dict | None = None):
    """Build dataclass ``cls`` from ``table``, refusing unknown keys."""
    rename = rename or {}
    convert = convert or {}
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, val in table.items():
        attr = rename.get(key, key)
        if attr not in names:
            _fail(f"{path}.{key}", "unknown field")
        if attr in convert:
            try:
                val = convert[attr](val)
            except (TypeError, ValueError, KeyError) as exc:
                _fail(f"{path}.{key}", f"invalid value {val!r} ({exc})")
        kwargs[attr] = val
    for f in dataclasses.fields(cls):
        if f.name in kwargs:
            want = type(f.default) if f.default is not dataclasses.MISSING else None
            got = kwargs[f.name]
            if want is float and isinstance(got, int) and not isinstance(got, bool):
                kwargs[f.name] = float(got)
            elif want in (int, float, str) and not isinstance(kwargs[f.name], want):
                _fail(f"{path}.{f.name}", f"expected {want.__name__}, got {type(got).__name__}")
    try:
        return cls(**kwargs)
    except (ValueError, PvConfigError) as exc:
        msg = str(exc)
        _fail(path, msg)


def _pair(v):
    a, b = v
    return (float(a), float(b))


def _disconnect(v):
    if isinstance(v, dict):
        ph = v["phase"]
        ph = PHASES[ph] if isinstance(ph, str) else int(ph)
        return (ph, float(v["t_on"]), float(v["t_off"]))
    raise ValueError("expected a table with phase, t_on, t_off")


def from_mapping(doc: dict[str, Any], name: str = "scenario") -> ScenarioConfig:
    doc = dict(doc)
    known = {"name", "pv-array", "mppt", "vsc-control", "plant-sim", "optimizers", "analysis"}
    for key in doc:
        if key not in known:
            _fail(key, "unknown section")
    name = doc.pop("name", name)

    sim = dict(doc.get("plant-sim", {}))
    grid = _take(sim.pop("grid", {}), "plant-sim.grid", GridParams)
    load = _take(sim.pop("load", {}), "plant-sim.load", LoadConfig, convert={"phase_disconnect": _disconnect})
    plant = _take(sim.pop("plant", {}), "plant-sim.plant", PlantParams)
    top = {}
    for key in list(sim):
        if key not in ("duration", "step", "seed"):
            _fail(f"plant-sim.{key}", "unknown field")
        top[key] = sim[key]
    for key, kind in (("duration", float), ("step", float), ("seed", int)):
        if key in top:
            v = top[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not isinstance(v, int)):
                _fail(f"plant-sim.{key}", f"expected {kind.__name__}")
            top[key] = kind(v)

    arr = dict(doc.get("pv-array", {}))
    module = _take(arr.pop("module", {}), "pv-array.module", PvModuleParams)
    sched_raw = arr.pop("irradiance", None)
    n_series = arr.pop("n_series", 18)
    n_parallel = arr.pop("n_parallel", 9)
    temperature = float(arr.pop("temperature", 25.0))
    bounds = arr.pop("sections", None)
    for key in arr:
        _fail(f"pv-array.{key}", "unknown field")
    if bounds is None:
        bounds = [[1, n_series]]
    try:
        sections = tuple(Section(int(a), int(b), 1000.0) for a, b in bounds)
        array = PvArrayConfig(module, int(n_series), int(n_parallel), sections, temperature)
    except (TypeError, ValueError, PvConfigError) as exc:
        _fail("pv-array.sections", str(exc))
    if sched_raw is None:
        schedule = (IrradianceStep(0.0, tuple(1000.0 for _ in sections)),)
    else:
        steps = []
        for k, entry in enumerate(sched_raw):
            if not isinstance(entry, dict) or set(entry) - {"t", "levels"} or "levels" not in entry:
                _fail(f"pv-array.irradiance[{k}]", "need keys t and levels")
            try:
                steps.append(IrradianceStep(float(entry.get("t", 0.0)), tuple(float(g) for g in entry["levels"])))
            except (TypeError, ValueError) as exc:
                _fail(f"pv-array.irradiance[{k}]", str(exc))
        schedule = tuple(steps)

    control = _take(doc.get("vsc-control", {}), "vsc-control", ControlConfig)
    mppt = _take(doc.get("mppt", {}), "mppt", MpptConfig)
    tuning = _take(doc.get("optimizers", {}), "optimizers", TuningConfig,
                   convert={"kp": _pair, "ki": _pair, "band": _pair})
    analysis = _take(doc.get("analysis", {}), "analysis", AnalysisConfig)
    cfg = ScenarioConfig(name=str(name), array=array, schedule=schedule, grid=grid, load=load, plant=plant,
                         control=control, mppt=mppt, tuning=tuning, analysis=analysis, **top)
    # files are run to be analysed; programmatic short runs may skip this
    if not 0 <= cfg.analysis.settle <= cfg.duration - 1.0 / cfg.grid.freq:
        _fail("analysis.settle", "must leave at least one fundamental cycle before the end of the run")
    return cfg


def loads(text: str, name: str = "scenario") -> ScenarioConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return from_mapping(doc, name)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled scenario named {name!r}")
    return Path(str(resources.files("gridpv") / "scenarios" / f"{name}.toml"))


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read a scenario file; bare names ``case1``..``case3`` pick the bundled ones."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror or exc})") from None
    try:
        return loads(text, p.stem)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from None
