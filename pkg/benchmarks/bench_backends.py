#!/usr/bin/env python3
"""Time the compiled kernel core against the numpy fallback.

Usage: python benchmarks/bench_backends.py [--repeat N]

Covers the three hot loops: the constant-parameter ensemble walk, the
strength-locked walk, and the finite-volume sweep.  Results are wall-clock
medians; the two backends compute identical numbers (see tests/test_backends).
"""

import argparse
import math
import time

import numpy as np

from zenowalk._kernels import py_kernels

try:
    from zenowalk._kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_walk_const(mod):
    rng = np.random.default_rng(1)
    n, steps = 100_000, 64
    x = rng.normal(0.0, 1.0, n)
    u = rng.random((n, steps))
    frozen = np.zeros(n, dtype=np.uint8)

    def run():
        mod.walk_const(x.copy(), frozen.copy(), u, 0.49, 0.024, -0.052, 0.047, 25.0)

    return run, f"walk_const        {n} walkers x {steps} steps"


def bench_walk_localized(mod):
    rng = np.random.default_rng(2)
    n, steps = 50_000, 64
    x = -np.abs(rng.normal(0.0, 1.0, n))
    u = rng.random((n, steps))

    def run():
        mod.walk_localized(
            x.copy(),
            np.zeros(n, dtype=np.uint8),
            u,
            math.pi / 4,
            0.1,
            0.7,
            1e-3,
            1000,
            np.zeros(n, dtype=np.int64),
            np.zeros(n, dtype=np.uint8),
            25.0,
        )

    return run, f"walk_localized    {n} walkers x {steps} steps"


def bench_fv_sweep(mod):
    rng = np.random.default_rng(3)
    n, steps = 128, 100_000
    p = np.abs(rng.normal(1.0, 0.1, n))
    a_lo = np.abs(rng.normal(2.0, 0.2, n))
    a_hi = np.abs(rng.normal(2.0, 0.2, n))

    def run():
        mod.fv_sweep(p.copy(), a_lo, a_hi, 0.05, 1e-4, steps, True)

    return run, f"fv_sweep          {n} cells x {steps} steps"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    benches = (bench_walk_const, bench_walk_localized, bench_fv_sweep)
    print(f"{'kernel':<45} {'python':>10} {'compiled':>10} {'speedup':>9}")
    for bench in benches:
        run_py, label = bench(py_kernels)
        t_py = timeit(run_py, args.repeat)
        if _core is not None:
            run_cy, _ = bench(_core)
            t_cy = timeit(run_cy, args.repeat)
            print(f"{label:<45} {t_py:>9.3f}s {t_cy:>9.3f}s {t_py / t_cy:>8.1f}x")
        else:
            print(f"{label:<45} {t_py:>9.3f}s {'n/a':>10} {'n/a':>9}")
    if _core is None:
        print("\ncompiled core not built; showing the numpy fallback only")


if __name__ == "__main__":
    main()
