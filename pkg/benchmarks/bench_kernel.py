"""Wall time of the compiled and pure-Python simulation kernels.

    python3 benchmarks/bench_kernel.py [--case case1] [--duration 0.1] [--repeat 3]
"""

import argparse
import statistics
import time

import numpy as np

from gridpv import kernel
from gridpv.config import load_scenario
from gridpv.sim import run_scenario


def bench(cfg, backend, duration, repeat):
    times, trace = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = run_scenario(cfg, backend=backend, duration=duration)
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times), trace


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="case1")
    ap.add_argument("--duration", type=float, default=0.1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = load_scenario(args.case)
    steps = int(round(args.duration / cfg.step))
    # curve and oracle caches are filled once, outside the timed runs
    run_scenario(cfg, duration=5.0 / cfg.grid.freq)
    results = {}
    for name in sorted(kernel.BACKENDS):
        best, med, trace = bench(cfg, name, args.duration, args.repeat)
        results[name] = trace
        print(f"{name:9s} best {best:8.3f} s  median {med:8.3f} s  {steps / best / 1e3:9.1f} ksteps/s")
    if "compiled" not in results:
        print("compiled kernel not built; only the fallback was timed")
    elif np.array_equal(results["compiled"].data, results["python"].data):
        print("traces bit-identical")
    else:
        print("WARNING: traces differ between backends")


if __name__ == "__main__":
    main()
