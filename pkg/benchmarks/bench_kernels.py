"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The compiled column is empty when numba is unavailable or disabled with
CMS_DISABLE_NUMBA.  The first compiled call (JIT warm-up) is excluded.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cms import _kernels as K


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng):
    vals = rng.integers(0, 50, size=8)
    vals[0] = max(vals[0], 1)
    yield "knapsack d=20000 k=8", "knapsack", (vals, 20000)
    sizes = np.sort(rng.integers(1, 9, size=3000))[::-1].copy()
    yield "first_fit m=3000 k=8", "first_fit", (sizes, 8)
    table = rng.integers(0, 6, size=(4, 3))
    demand = rng.integers(0, 10, size=4)
    slots = np.array([0, 1, 2, 0, 1, 2])
    yield "brute n=4 slots=6", "brute", (table, demand, slots)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    numpy_fns = {"knapsack": K.knapsack_min_cost_numpy, "first_fit": K.first_fit_numpy,
                 "brute": K.brute_throughput_numpy}
    jit_fns = {"knapsack": K.knapsack_min_cost, "first_fit": K.first_fit,
               "brute": K.brute_throughput}
    print("%-24s %12s %12s %8s  same" % ("case", "numpy ms", "numba ms", "speedup"))
    for name, key, data in cases(rng):
        tn, on = _time(numpy_fns[key], data, args.repeat)
        if K.NUMBA:
            jit_fns[key](*data)
            tj, oj = _time(jit_fns[key], data, args.repeat)
            same = bool(np.array_equal(np.asarray(on), np.asarray(oj)))
            print("%-24s %12.3f %12.3f %8.1f  %s" % (name, tn * 1e3, tj * 1e3, tn / tj, same))
        else:
            print("%-24s %12.3f %12s %8s  -" % (name, tn * 1e3, "", ""))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
