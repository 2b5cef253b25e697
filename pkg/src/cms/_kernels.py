"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a loop version (``*_loop``) that numba compiles,
and a vectorized numpy version (``*_numpy``).  The public name points at the
compiled loop unless ``CMS_DISABLE_NUMBA`` is set to a non-empty value other
than ``0`` or numba is not importable, in which case it points at the numpy
version.  Both are always importable so tests and benchmarks can compare them.
"""
from __future__ import annotations

import os

import numpy as np

INF = np.iinfo(np.int64).max // 4

_flag = os.environ.get("CMS_DISABLE_NUMBA", "")
try:
    if _flag not in ("", "0"):
        raise ImportError("disabled by CMS_DISABLE_NUMBA")
    from numba import njit
    NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag in CI
    NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        if args and callable(args[0]):
            return args[0]
        return wrap


# -- unbounded min-knapsack over covered demand -------------------------------

def knapsack_min_cost_loop(values, demand):
    """``cost[v]`` = least total size covering ``v`` units; sizes are ``1..len(values)``."""
    k = values.shape[0]
    cost = np.empty(demand + 1, dtype=np.int64)
    cost[0] = 0
    for v in range(1, demand + 1):
        best = INF
        for i in range(k):
            f = values[i]
            if f <= 0:
                continue
            rest = v - f
            if rest < 0:
                rest = 0
            c = cost[rest]
            if c < INF and c + i + 1 < best:
                best = c + i + 1
        cost[v] = best
    return cost


def knapsack_min_cost_numpy(values, demand):
    values = np.asarray(values, dtype=np.int64)
    sizes = np.arange(1, values.shape[0] + 1, dtype=np.int64)
    useful = values > 0
    vals, sizes = values[useful], sizes[useful]
    cost = np.full(demand + 1, INF, dtype=np.int64)
    cost[0] = 0
    for v in range(1, demand + 1):
        if vals.size == 0:
            break
        prev = cost[np.maximum(v - vals, 0)]
        cand = np.where(prev < INF, prev + sizes, INF)
        cost[v] = cand.min()
    return cost


# -- first-fit bin packing -----------------------------------------------------

def first_fit_loop(sizes, capacity):
    """Bin index for each item, placing each in the first bin with room."""
    m = sizes.shape[0]
    where = np.empty(m, dtype=np.int64)
    loads = np.zeros(m, dtype=np.int64)
    nbins = 0
    for t in range(m):
        s = sizes[t]
        placed = -1
        for b in range(nbins):
            if loads[b] + s <= capacity:
                placed = b
                break
        if placed < 0:
            placed = nbins
            nbins += 1
        loads[placed] += s
        where[t] = placed
    return where


def first_fit_numpy(sizes, capacity):
    sizes = np.asarray(sizes, dtype=np.int64)
    m = sizes.shape[0]
    where = np.empty(m, dtype=np.int64)
    loads = np.zeros(max(m, 1), dtype=np.int64)
    nbins = 0
    for t in range(m):
        s = sizes[t]
        fits = np.flatnonzero(loads[:nbins] + s <= capacity)
        if fits.size:
            b = fits[0]
        else:
            b = nbins
            nbins += 1
        loads[b] += s
        where[t] = b
    return where


# -- exhaustive single-machine throughput ------------------------------------

def brute_throughput_loop(table, demand, slots):
    """Best ``sum_j min(D_j, served_j)`` over all slot->job maps (job ``n`` = idle)."""
    n = table.shape[0]
    s = slots.shape[0]
    total = 1
    for _ in range(s):
        total *= n + 1
    served = np.zeros(n, dtype=np.int64)
    best = 0
    for code in range(total):
        for j in range(n):
            served[j] = 0
        c = code
        for t in range(s):
            j = c % (n + 1)
            c //= n + 1
            if j < n:
                served[j] += table[j, slots[t]]
        val = 0
        for j in range(n):
            val += min(served[j], demand[j])
        if val > best:
            best = val
    return best


def brute_throughput_numpy(table, demand, slots):
    table = np.asarray(table, dtype=np.int64)
    demand = np.asarray(demand, dtype=np.int64)
    slots = np.asarray(slots, dtype=np.int64)
    n, s = table.shape[0], slots.shape[0]
    if n == 0 or s == 0:
        return 0
    grid = np.indices((n + 1,) * s).reshape(s, -1)
    served = np.zeros((n, grid.shape[1]), dtype=np.int64)
    for t in range(s):
        gain = table[:, slots[t]]
        for j in range(n):
            served[j] += np.where(grid[t] == j, gain[j], 0)
    return int(np.minimum(served, demand[:, None]).sum(axis=0).max())


if NUMBA:
    _knapsack_jit = njit(cache=True)(knapsack_min_cost_loop)
    _first_fit_jit = njit(cache=True)(first_fit_loop)
    _brute_jit = njit(cache=True)(brute_throughput_loop)

    def knapsack_min_cost(values, demand):
        return _knapsack_jit(np.asarray(values, dtype=np.int64), int(demand))

    def first_fit(sizes, capacity):
        return _first_fit_jit(np.asarray(sizes, dtype=np.int64), int(capacity))

    def brute_throughput(table, demand, slots):
        return int(_brute_jit(np.asarray(table, dtype=np.int64).reshape(len(demand), -1),
                              np.asarray(demand, dtype=np.int64),
                              np.asarray(slots, dtype=np.int64)))
else:
    knapsack_min_cost = knapsack_min_cost_numpy
    first_fit = first_fit_numpy
    brute_throughput = brute_throughput_numpy
