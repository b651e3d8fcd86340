"""``gridpv`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 simulation or
training fault, 3 file I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import analysis as A
from . import kernel
from .anfis import AnfisError, AnfisNet, TrainingSet, hybrid_train
from .config import BUNDLED, ConfigError, ScenarioConfig, load_scenario
from .mppt import teacher_dataset, train_mppt_net
from .report import format_summary, summarize, write_text, write_thd_csv
from .sim import SimTrace, SimulationFault, run_scenario
from .tuning import tuned_gains

EXIT_OK, EXIT_USAGE, EXIT_FAULT, EXIT_IO = 0, 1, 2, 3

VARIANTS = ("proposed", "po", "pso-tuned")
EMITS = ("csv", "svg", "summary")

log = logging.getLogger("gridpv")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def apply_variant(cfg: ScenarioConfig, variant: str | None) -> ScenarioConfig:
    """Controller variant on top of a scenario.

    ``proposed`` is ANFIS tracking with rain-optimised VSC gains, ``po`` swaps
    the tracker for perturb-and-observe and ``pso-tuned`` keeps ANFIS but
    tunes the gains with particle swarm.  ``None`` leaves the file's choice.
    """
    if variant is None:
        return cfg
    method, tune = {"proposed": ("anfis", "roa"), "po": ("po", "roa"), "pso-tuned": ("anfis", "pso")}[variant]
    return cfg.replace(mppt=dataclasses.replace(cfg.mppt, method=method),
                       control=dataclasses.replace(cfg.control, tune=tune))


@dataclass(frozen=True)
class RunManifest:
    scenario: str
    out: Path
    seed: int | None = None
    variant: str | None = None
    emit: tuple[str, ...] = EMITS
    backend: str | None = None

    def __post_init__(self):
        if self.variant is not None and self.variant not in VARIANTS:
            raise UsageError(f"unknown variant {self.variant!r}")
        bad = set(self.emit) - set(EMITS)
        if bad:
            raise UsageError(f"unknown emit flag(s): {', '.join(sorted(bad))}")
        if self.backend is not None and self.backend not in kernel.BACKENDS:
            raise UsageError(f"unknown backend {self.backend!r}")


def _writable_dir(path: Path) -> None:
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".gridpv-write-test"
    probe.write_bytes(b"")
    probe.unlink()


def _config(m: RunManifest) -> ScenarioConfig:
    cfg = load_scenario(m.scenario)
    if m.seed is not None:
        cfg = cfg.replace(seed=m.seed)
    return apply_variant(cfg, m.variant)


def execute(m: RunManifest) -> int:
    """Run one manifest; returns the exit code and reports on stderr."""
    try:
        cfg = _config(m)
    except ConfigError as exc:
        print(f"gridpv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _writable_dir(m.out)
    except OSError as exc:
        print(f"gridpv: output directory {m.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO

    header = {"scenario": cfg.name, "variant": m.variant or "as-configured", "mppt": cfg.mppt.method,
              "tuning": cfg.control.tune, "seed": cfg.seed}
    fault = tune = None
    try:
        gains, tune = tuned_gains(cfg)
        trace = run_scenario(cfg, backend=m.backend, gains=gains)
    except SimulationFault as exc:
        fault, trace = exc, exc.trace
    except (ValueError, ArithmeticError) as exc:
        print(f"gridpv: {cfg.name}: {exc}", file=sys.stderr)
        return EXIT_FAULT
    header["gains (kp, ki, band)"] = ", ".join(repr(g) for g in trace.gains)
    if fault is None and tune is not None:
        header["tuning cost"] = f"{tune.cost!r} (defaults {tune.default_cost!r}, {tune.evaluations} evaluations)"
    header["backend"] = trace.backend
    header["status"] = "FAULT: " + str(fault) if fault else "ok"

    try:
        if "csv" in m.emit:
            trace.to_csv(m.out / "trace.csv")
        if fault is not None:
            if "summary" in m.emit:
                write_text(m.out / "summary.txt", "\n".join(f"{k}: {v}" for k, v in header.items()) + "\n")
            print(f"gridpv: {cfg.name}: simulation fault at {fault}", file=sys.stderr)
            return EXIT_FAULT
        if "csv" in m.emit:
            write_thd_csv(trace, cfg, m.out / "thd.csv")
        if "summary" in m.emit:
            header["wall time s"] = f"{trace.wall_time:.3f}"
            write_text(m.out / "summary.txt", format_summary(summarize(trace, cfg), header))
        if "svg" in m.emit:
            from . import plots

            a = cfg.analysis
            plots.write_all(trace, m.out, cfg.grid.freq, a.max_order, a.thd_cycles)
    except OSError as exc:
        print(f"gridpv: writing to {m.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except ImportError as exc:
        print(f"gridpv: svg output needs matplotlib ({exc})", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _emit(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def cmd_run(args) -> int:
    emit = _emit(args.emit)
    out = Path(args.out)
    if args.all:
        if args.scenario:
            raise UsageError("--all and --scenario are exclusive")
        ms = [RunManifest(c, out / c, args.seed, args.variant, emit, args.backend) for c in BUNDLED]
        with ProcessPoolExecutor(max_workers=len(ms)) as pool:
            codes = list(pool.map(execute, ms))
        for mf, code in zip(ms, codes):
            print(f"{mf.scenario}: exit {code}")
        return max(codes)
    if not args.scenario:
        raise UsageError("give --scenario or --all")
    return execute(RunManifest(args.scenario, out, args.seed, args.variant, emit, args.backend))


def cmd_train(args) -> int:
    if not args.generate and not args.dataset:
        raise UsageError("give --dataset PATH or --generate")
    if args.generate and args.dataset:
        raise UsageError("--dataset and --generate are exclusive")
    out = Path(args.out)
    try:
        if args.generate:
            data = teacher_dataset(v_dc=args.v_dc, seed=args.seed)
        else:
            data = TrainingSet.load_csv(args.dataset)
    except FileNotFoundError:
        raise UsageError(f"dataset {args.dataset} not found") from None
    except (OSError, ValueError) as exc:
        print(f"gridpv: dataset: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.init:
            net, trace = hybrid_train(AnfisNet.load(args.init), data, epochs=args.epochs, lr=args.lr)
        else:
            net, trace = train_mppt_net(data, epochs=args.epochs, lr=args.lr, n_mf=args.mfs)
    except FileNotFoundError:
        raise UsageError(f"initial network {args.init} not found") from None
    except AnfisError as exc:
        print(f"gridpv: training: {exc}", file=sys.stderr)
        return EXIT_FAULT
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        net.save(out)
        with open(f"{out}.rmse.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "rmse"])
            w.writerows((k, repr(v)) for k, v in enumerate(trace.rmse))
        if args.generate:
            data.save_csv(f"{out}.dataset.csv")
    except OSError as exc:
        print(f"gridpv: writing {out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    print(f"rmse {trace.rmse[0]:.6g} -> {trace.rmse[-1]:.6g} over {args.epochs} epochs; saved {out}")
    return EXIT_OK


def _compare_one(job):
    scenario, variant, seed, backend = job
    cfg = apply_variant(load_scenario(scenario), variant)
    if seed is not None:
        cfg = cfg.replace(seed=seed)
    gains, _ = tuned_gains(cfg)
    tr = run_scenario(cfg, backend=backend, gains=gains)
    a = cfg.analysis
    h = A.thd(tr["i_g_a"], cfg.grid.freq, 1.0 / tr.dt, a.max_order, a.thd_cycles)
    mrep = A.mppt_metrics(tr.t, tr["p_pv"], tr.oracle, a.track_band)[0]
    return variant, h, mrep, tr.wall_time


def cmd_compare(args) -> int:
    try:
        load_scenario(args.scenario)
    except ConfigError as exc:
        print(f"gridpv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    jobs = [(args.scenario, v, args.seed, args.backend) for v in VARIANTS]
    try:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(pool.map(_compare_one, jobs))
    except SimulationFault as exc:
        print(f"gridpv: compare: {exc}", file=sys.stderr)
        return EXIT_FAULT
    rows = [A.CompareRow(v, h.thd_percent, m.tracking_efficiency_percent, m.time_to_track, wt)
            for v, h, m, wt in results]
    table = A.format_table(sorted(rows, key=lambda r: r.label))
    print(table)
    if args.out:
        try:
            write_text(args.out, table + "\n")
        except OSError as exc:
            print(f"gridpv: writing {args.out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def cmd_analyze(args) -> int:
    """Recompute the summary numbers of a saved trace."""
    try:
        cfg = load_scenario(args.scenario)
    except ConfigError as exc:
        print(f"gridpv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        tr = SimTrace.from_csv(args.trace, cfg.name)
    except (OSError, ValueError) as exc:
        print(f"gridpv: {args.trace}: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(format_summary(summarize(tr, cfg), {}).lstrip("\n"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gridpv", description="Grid-tied PV system simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate one scenario or all bundled cases")
    r.add_argument("--scenario", help="scenario file, or case1/case2/case3")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--variant", choices=VARIANTS, help="controller variant (default: as in the scenario file)")
    r.add_argument("--all", action="store_true", help="run the three bundled cases concurrently")
    r.add_argument("--emit", default="csv,summary", help="comma list of csv, svg, summary")
    r.add_argument("--backend", choices=sorted(kernel.BACKENDS))
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("train-anfis", help="train the MPPT network")
    t.add_argument("--dataset", help="CSV with x,y,target columns")
    t.add_argument("--generate", action="store_true", help="build the incremental-conductance teacher dataset")
    t.add_argument("--out", required=True, help="parameter file to write")
    t.add_argument("--init", help="parameter file to continue training from")
    t.add_argument("--epochs", type=int, default=50)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--mfs", type=int, default=3, help="membership functions per input")
    t.add_argument("--v-dc", type=float, default=700.0, help="DC link voltage used for the teacher runs")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compare", help="run every controller variant on one scenario")
    c.add_argument("--scenario", required=True)
    c.add_argument("--seed", type=int)
    c.add_argument("--out", help="also write the table here")
    c.add_argument("--backend", choices=sorted(kernel.BACKENDS))
    c.set_defaults(func=cmd_compare)

    a = sub.add_parser("analyze", help="summary numbers of a saved trace.csv")
    a.add_argument("--trace", required=True)
    a.add_argument("--scenario", required=True)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gridpv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
