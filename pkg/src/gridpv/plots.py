"""SVG figures of a run, drawn with matplotlib's Agg backend."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import analysis as A
from .sim import SimTrace


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def overview(trace: SimTrace, path) -> None:
    """PV power and current, DC link, grid active and reactive power."""
    plt = _plt()
    t = trace.t
    fig, axes = plt.subplots(5, 1, figsize=(8, 10), sharex=True)
    for ax, name, unit in zip(axes, ("p_pv", "i_pv", "v_dc", "p_g", "q_g"), ("W", "A", "V", "W", "var")):
        ax.plot(t, trace[name], lw=0.6)
        ax.set_ylabel(f"{name} [{unit}]")
    axes[-1].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def waveforms(trace: SimTrace, path, cycles: int = 3, f0: float = 50.0) -> None:
    """PCC voltages, grid currents and load currents over the last cycles."""
    plt = _plt()
    n = int(round(cycles / f0 / trace.dt))
    sl = slice(len(trace) - n - 1, len(trace))
    t = trace.t[sl]
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    for ax, prefix in zip(axes, ("v_g", "i_g", "i_load")):
        for ph, y in zip("abc", trace.abc(prefix)[:, sl]):
            ax.plot(t, y, lw=0.7, label=ph)
        ax.set_ylabel(prefix)
        ax.legend(loc="upper right", fontsize=7)
    axes[-1].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def spectrum(trace: SimTrace, path, channel: str = "i_g_a", f0: float = 50.0, max_order: int = 50,
             cycles: int = 5) -> None:
    plt = _plt()
    rep = A.thd(trace[channel], f0, 1.0 / trace.dt, max_order, cycles)
    orders = np.arange(len(rep.amplitudes))
    rel = rep.amplitudes / rep.fundamental * 100.0
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.bar(orders[1:], rel[1:], width=0.6)
    ax.set_xlabel("harmonic order")
    ax.set_ylabel("% of fundamental")
    ax.set_title(f"{channel}: THD {rep.thd_percent:.2f} %")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_all(trace: SimTrace, out_dir, f0: float = 50.0, max_order: int = 50, cycles: int = 5) -> list[Path]:
    out = Path(out_dir)
    paths = [out / "overview.svg", out / "waveforms.svg", out / "spectrum_grid.svg", out / "spectrum_load.svg"]
    overview(trace, paths[0])
    waveforms(trace, paths[1], f0=f0)
    spectrum(trace, paths[2], "i_g_a", f0, max_order, cycles)
    spectrum(trace, paths[3], "i_load_a", f0, max_order, cycles)
    return paths
