"""Approximation scheme for few configurations of bounded size, and the
pseudo-polynomial DP for the same setting.

Jobs that a single machine serves at least an ``eps`` fraction of are
*small*.  Each small job is described by the set of bounded block-count
*patterns* that satisfy it, and jobs with equal sets share LP variables.
Large jobs get per-block variables.  Below a size threshold the exact solver is
used instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .lp import GE, LE, LinearProgram, solve_min
from .model import (GuardExceeded, InfeasibleError, Instance, KindMismatch,
                    Schedule, realize)
from .oracle import _minimal_vectors, exact_schedule

DEFAULT_PATTERN_CAP = 10**6
DP_STATE_CAP = 2 * 10**6


def _frac(eps) -> Fraction:
    return eps if isinstance(eps, Fraction) else Fraction(str(eps))


@dataclass(frozen=True)
class PtasParams:
    eps: Fraction
    lam: Fraction
    bound: int          # largest pattern total, floor(k / lam^2)
    b: int
    k: int
    n_patterns: int     # |W|, counted without enumerating

    def use_exact(self, n: int, n_configs: int) -> bool:
        """The small-instance test ``n <= k(|C| + 2^|W|)/lam``."""
        lhs = Fraction(n) * self.lam / self.k - n_configs
        if lhs <= 0:
            return True
        # 2^|W| dwarfs any realistic n long before we could form it
        if self.n_patterns >= lhs.numerator.bit_length() + 1:
            return True
        return lhs <= 2 ** self.n_patterns


def ptas_params(inst: Instance, eps) -> PtasParams:
    eps = _frac(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    k = max((c.size for c in inst.configurations), default=1)
    lam = eps / (2 * k)
    bound = math.floor(k / (lam * lam))
    b = len(inst.blocks)
    return PtasParams(eps, lam, bound, b, k, math.comb(bound + b, b))


def classify_jobs(inst: Instance, eps) -> tuple[list[int], list[int]]:
    """Indices of (large, small) jobs; small means one machine serves an ``eps`` share."""
    eps = _frac(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    F = np.asarray(inst.table, dtype=np.int64).reshape(inst.n, len(inst.blocks))
    A = np.asarray(inst.config_vectors, dtype=np.int64).reshape(-1, len(inst.blocks))
    per_config = F @ A.T if A.size else np.zeros((inst.n, 0), dtype=np.int64)
    best = per_config.max(axis=1) if per_config.shape[1] else np.zeros(inst.n, dtype=np.int64)
    large, small = [], []
    for j in range(inst.n):
        (small if int(best[j]) >= eps * inst.demands[j] else large).append(j)
    return large, small


def enumerate_patterns(b: int, bound: int, cap: int = DEFAULT_PATTERN_CAP) -> np.ndarray:
    """All b-vectors with total at most ``bound``, ordered colexicographically.

    Row ``r`` is pattern ``r``.  Refuses (``GuardExceeded``) when ``bound**b``
    exceeds ``cap``.
    """
    if bound ** b > cap:
        raise GuardExceeded("pattern space %d^%d exceeds cap %d; raise eps or the cap"
                            % (bound, b, cap))
    rows = [p[::-1] for p in product(range(bound + 1), repeat=b) if sum(p) <= bound]
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), b)


def job_type(f: Sequence[int], d: int, W: np.ndarray) -> frozenset:
    """Indices of patterns in ``W`` that satisfy demand ``d`` under table ``f``."""
    served = W @ np.asarray(f, dtype=np.int64)
    return frozenset(np.flatnonzero(served >= d).tolist())


def _minimal(t: frozenset, W: np.ndarray) -> list[int]:
    idx = sorted(t)
    sub = W[idx]
    keep = []
    for r, p in enumerate(idx):
        le = np.all(sub <= sub[r], axis=1)
        le[r] = False
        if not le.any():
            keep.append(p)
    return keep


@dataclass
class PtasModel:
    lp: LinearProgram
    large: list
    small: list
    W: np.ndarray
    types: list          # distinct types in first-seen order
    members: dict        # type -> job indices
    zvars: dict          # (type position, pattern index) -> variable name


def build_ptas_lp(inst: Instance, params: PtasParams, large: Sequence[int], small: Sequence[int],
                  W: np.ndarray, patterns: str = "minimal") -> PtasModel:
    """Build the PTAS LP.

    ``patterns="minimal"`` only creates z-variables for the minimal satisfying
    patterns of each type, and ``"satisfying"`` creates them for every
    satisfying pattern.  Both give the same optimum, because a pattern can
    always be swapped for a smaller one inside the same type.
    """
    lp = LinearProgram()
    bl = inst.blocks
    types: list = []
    members: dict = {}
    for j in small:
        t = job_type(inst.table[j], inst.demands[j], W)
        if not t:
            raise InfeasibleError("small job %s has no satisfying pattern" % inst.jobs[j].id)
        if t not in members:
            types.append(t)
            members[t] = []
        members[t].append(j)
    for j in large:
        for p in range(len(bl)):
            lp.add_variable("x[%s,%s]" % (inst.jobs[j].id, bl[p]))
    for s in range(len(inst.configurations)):
        lp.add_variable("y[%d]" % s, cost=1)
    zvars: dict = {}
    for ti, t in enumerate(types):
        chosen = _minimal(t, W) if patterns == "minimal" else sorted(t)
        for pi in chosen:
            name = "z[%d,%d]" % (ti, pi)
            lp.add_variable(name)
            zvars[(ti, pi)] = name
    for p, blk in enumerate(bl):
        coeffs: dict = {"x[%s,%s]" % (inst.jobs[j].id, blk): 1 for j in large}
        for (ti, pi), name in zvars.items():
            if W[pi, p]:
                coeffs[name] = int(W[pi, p])
        for s, vec in enumerate(inst.config_vectors):
            if vec[p]:
                coeffs["y[%d]" % s] = -vec[p]
        lp.add_constraint(coeffs, LE, 0, name="supply[%s]" % (blk,))
    for j in large:
        row = inst.table[j]
        lp.add_constraint({"x[%s,%s]" % (inst.jobs[j].id, bl[p]): row[p] for p in range(len(bl))},
                          GE, inst.demands[j], name="large[%s]" % inst.jobs[j].id)
    for ti, t in enumerate(types):
        lp.add_constraint({name: 1 for (tt, _), name in zvars.items() if tt == ti},
                          GE, len(members[t]), name="small[%d]" % ti)
    return PtasModel(lp, list(large), list(small), W, types, members, zvars)


@dataclass
class PtasResult:
    schedule: Schedule
    path: str                    # "exact" or "lp"
    lp_value: Optional[Fraction] = None
    blocks_per_small_job: Optional[dict] = None


def solve_ptas_detailed(inst: Instance, eps, pattern_cap: int = DEFAULT_PATTERN_CAP,
                        patterns: str = "minimal") -> PtasResult:
    if inst.is_numerical:
        raise KindMismatch("the approximation scheme needs a combinatorial instance")
    params = ptas_params(inst, eps)
    if params.use_exact(inst.n, len(inst.configurations)):
        return PtasResult(exact_schedule(inst), "exact")
    W = enumerate_patterns(params.b, params.bound, pattern_cap)
    large, small = classify_jobs(inst, params.eps)
    model = build_ptas_lp(inst, params, large, small, W, patterns)
    sol = solve_min(model.lp)
    if not sol.feasible:
        raise InfeasibleError("approximation LP is infeasible")
    val = sol.values
    bl = inst.blocks
    alloc: dict = {}     # (block, job id) -> count

    def give(blk, jid, cnt):
        if cnt > 0:
            alloc[(blk, jid)] = alloc.get((blk, jid), 0) + cnt

    for j in large:
        for blk in bl:
            give(blk, inst.jobs[j].id, math.ceil(val["x[%s,%s]" % (inst.jobs[j].id, blk)]))
    per_small: dict = {}
    for ti, t in enumerate(model.types):
        queue = list(model.members[t])
        for (tt, pi), name in model.zvars.items():
            if tt != ti:
                continue
            for _ in range(math.ceil(val[name])):
                if not queue:
                    break
                j = queue.pop(0)
                per_small[inst.jobs[j].id] = int(W[pi].sum())
                for p, blk in enumerate(bl):
                    give(blk, inst.jobs[j].id, int(W[pi, p]))
        assert not queue
    plan = [(c, math.ceil(val["y[%d]" % s])) for s, c in enumerate(inst.configurations)]
    for p, blk in enumerate(bl):
        need = sum(c for (bb, _), c in alloc.items() if bb == blk)
        have = sum(cnt * c.count(blk) for c, cnt in plan)
        if need > have:
            host = next(c for c in inst.configurations if c.count(blk))
            plan.append((host, -(-(need - have) // host.count(blk))))
    order = sorted(alloc.items(), key=lambda kv: (inst.block_index[kv[0][0]], inst.job_index[kv[0][1]]))
    sched = realize([(c, m) for c, m in plan if m > 0], [(b, j, c) for (b, j), c in order])
    return PtasResult(sched, "lp", sol.objective_value, per_small)


def solve_ptas(inst: Instance, eps=Fraction(1, 2), pattern_cap: int = DEFAULT_PATTERN_CAP) -> Schedule:
    return solve_ptas_detailed(inst, eps, pattern_cap).schedule


# -- pseudo-polynomial DP ---------------------------------------------------------

def _job_allocations(row: Sequence[int], d: int) -> list[tuple[int, ...]]:
    return _minimal_vectors(row, d, [True] * len(row))


def _demand_fits(inst: Instance, supply: tuple, allocs: list, cap: int) -> bool:
    """Can every job be given one of its allocations within ``supply``?

    Forward pass over jobs keeping only Pareto-maximal leftover supplies.
    """
    frontier = {supply}
    for opts in allocs:
        nxt = set()
        for s in frontier:
            for v in opts:
                if all(a >= c for a, c in zip(s, v)):
                    nxt.add(tuple(a - c for a, c in zip(s, v)))
        if not nxt:
            return False
        pts = sorted(nxt, key=sum, reverse=True)
        keep: list = []
        for p in pts:
            if not any(all(a >= c for a, c in zip(q, p)) for q in keep):
                keep.append(p)
        if len(keep) > cap:
            raise GuardExceeded("DP frontier exceeds %d states" % cap)
        frontier = set(keep)
    return True


def _distributions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _distributions(total - first, parts - 1):
            yield (first,) + rest


def _feasible_with(inst: Instance, N: int, allocs: list, cap: int):
    vecs = inst.config_vectors
    seen: set = set()
    count = 0
    for dist in _distributions(N, len(vecs)):
        supply = tuple(sum(m * v[i] for m, v in zip(dist, vecs)) for i in range(len(inst.blocks)))
        if supply in seen:
            continue
        seen.add(supply)
        count += 1
        if count > cap:
            raise GuardExceeded("DP machine distributions exceed %d" % cap)
        if _demand_fits(inst, supply, allocs, cap):
            return dist
    return None


def _dp_core(inst: Instance, cap: int):
    if inst.is_numerical:
        raise KindMismatch("the DP needs a combinatorial instance")
    allocs = []
    for j, row in enumerate(inst.table):
        opts = _job_allocations(row, inst.demands[j])
        if not opts:
            raise InfeasibleError("job %s cannot be satisfied" % inst.jobs[j].id)
        allocs.append(opts)
    if not inst.configurations:
        if any(d > 0 for d in inst.demands):
            raise InfeasibleError("no configurations")
        return 0, (), allocs
    # serving each job on its own best machines is always feasible
    hi = 0
    for j, row in enumerate(inst.table):
        best = max(sum(a * f for a, f in zip(v, row)) for v in inst.config_vectors)
        if inst.demands[j] > 0:
            if best == 0:
                raise InfeasibleError("job %s cannot be satisfied" % inst.jobs[j].id)
            hi += -(-inst.demands[j] // best)
    lo = 0
    dist = _feasible_with(inst, hi, allocs, cap)
    if dist is None:
        raise InfeasibleError("no machine count up to %d suffices" % hi)
    while lo < hi:
        mid = (lo + hi) // 2
        got = _feasible_with(inst, mid, allocs, cap)
        if got is not None:
            hi, dist = mid, got
        else:
            lo = mid + 1
    return hi, dist, allocs


def dp_min_machines(inst: Instance, cap: int = DP_STATE_CAP) -> int:
    """Optimal machine count by binary search over ``N`` and a forward feasibility DP."""
    return _dp_core(inst, cap)[0]


def dp_schedule(inst: Instance, cap: int = DP_STATE_CAP) -> Schedule:
    N, dist, allocs = _dp_core(inst, cap)
    if N == 0:
        return Schedule()
    supply = tuple(sum(m * v[i] for m, v in zip(dist, inst.config_vectors))
                   for i in range(len(inst.blocks)))
    # replay the forward pass, remembering one parent per state
    layers = [{supply: None}]
    for opts in allocs:
        nxt: dict = {}
        for s in layers[-1]:
            for v in opts:
                if all(a >= c for a, c in zip(s, v)):
                    nxt.setdefault(tuple(a - c for a, c in zip(s, v)), (s, v))
        layers.append(nxt)
    state = next(iter(layers[-1]))
    choice = []
    for layer in reversed(layers[1:]):
        prev, v = layer[state]
        choice.append(v)
        state = prev
    choice.reverse()
    alloc = [(blk, inst.jobs[j].id, v[i]) for i, blk in enumerate(inst.blocks)
             for j, v in enumerate(choice) if v[i] > 0]
    plan = [(c, m) for c, m in zip(inst.configurations, dist) if m > 0]
    return realize(plan, alloc)
