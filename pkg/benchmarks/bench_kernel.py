#!/usr/bin/env python3
"""Benchmark the compiled rate kernel against the pure-numpy fallback.

The workload mirrors what the optimizer does: full grid scans over the
vacuum-yield box (the per-candidate cost of the worst-case minimization)
and repeated single-point evaluations (golden-section refinement).

Usage: python benchmarks/bench_kernel.py [--grid 200] [--repeats 20]
"""
import argparse
import time

import numpy as np

from decoykit import AnalysisConfig, build_protocol, simulate_observed, ChannelParams
from decoykit import _kernel
from decoykit.keyrate import _prepare

CASES = {
    "4Int-1 (1-D scan)": (
        "4Int-1",
        {"p_Z1": 0.19, "p_Z2": 0.597, "p_X1": 0.112,
         "mu_Z1": 0.078, "mu_Z2": 0.379, "mu_X1": 0.255, "q_x": 0.223},
    ),
    "4Int-2 (2-D scan)": (
        "4Int-2",
        {"p_Z1": 0.077, "p_Z2": 0.26, "p_X1": 0.205,
         "mu_Z1": 0.2, "mu_Z2": 0.419, "mu_X1": 0.073, "mu_X2": 0.396, "q_x": 0.579},
    ),
    "5Int-1 (3 terms)": (
        "5Int-1",
        {"p_Z1": 0.1, "p_Z2": 0.22, "p_X1": 0.2, "p_O": 0.01,
         "mu_Z1": 0.23, "mu_Z2": 0.42, "mu_X1": 0.086, "mu_X2": 0.4,
         "q_x": 0.58, "ps_Z1": 0.1},
    ),
}


def _time(fn, repeats):
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grid", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--distance", type=float, default=110.0)
    args = parser.parse_args()

    backends = _kernel.available_backends()
    print(f"available backends: {backends} (default: {_kernel.default_backend()})")
    header = f"{'case':<22} {'workload':<18}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for name, (family, params) in CASES.items():
        proto = build_protocol(family, params, 1e10)
        stats = simulate_observed(proto, ChannelParams(distance_km=args.distance))
        an = _prepare(proto, stats, AnalysisConfig())
        lz, hz = an.s0_z_interval
        lx, hx = an.s0_x_interval
        zs = np.linspace(lz, hz, args.grid)[:, None]
        xs = np.linspace(lx, hx, args.grid)[None, :]
        mid_z, mid_x = (lz + hz) / 2, (lx + hx) / 2

        workloads = {
            f"{args.grid}x{args.grid} grid": lambda b: _kernel.rate_grid(an.ctx, zs, xs, backend=b),
            "single point": lambda b: _kernel.rate_point(an.ctx, mid_z, mid_x, backend=b),
        }
        for wname, fn in workloads.items():
            times = [_time(lambda b=b: fn(b), args.repeats) for b in backends]
            row = f"{name:<22} {wname:<18}"
            for t in times:
                row += f"{t * 1e3:>10.3f}ms"
            if len(times) == 2:
                row += f"{times[1] / times[0]:>9.2f}x"  # py time / c time
            print(row)

        values = [
            float(_kernel.rate_grid(an.ctx, zs, xs, backend=b).sum()) for b in backends
        ]
        if len(values) == 2 and not np.isclose(values[0], values[1], rtol=1e-12):
            raise SystemExit(f"backend disagreement for {name}: {values}")


if __name__ == "__main__":
    main()
