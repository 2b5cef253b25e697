"""Logarithmic-approximation pipeline for combinatorial instances.

LP relaxation, split into integer and fractional parts, cover the integer part
with a greedy multiset multicover, serve the fractional remainder with
highest-throughput-first, and double both schedules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence

from .lp import build_cms_lp, solve_min, x_var
from .model import (Configuration, InfeasibleError, Instance, KindMismatch,
                    MachineUse, Schedule, realize)


@dataclass(frozen=True)
class SplitSolution:
    """``integer_part[(b, j)]`` = floor of x*, ``fractional_part[(b, j)]`` = 0 or twice the remainder."""

    integer_part: dict
    fractional_part: dict


@dataclass(frozen=True)
class Batch:
    """One highest-throughput-first step: ``count`` copies of one greedy machine."""

    index: int
    configuration: Configuration
    assignment: tuple
    throughput: int
    count: int


def max_throughput_machine(inst: Instance, D: Sequence[int],
                           caps: Optional[Mapping[tuple, int]] = None):
    """Greedy single machine: best configuration with slot-by-slot job picks.

    ``D`` is the remaining demand per job (instance order).  ``caps``, when
    given, limits how many blocks each ``(block index, job index)`` pair may
    take on this machine (missing pairs are forbidden).  Returns
    ``(configuration, assignment, throughput)`` with the assignment as
    ``((block, job id or None), ...)``.
    """
    if not any(d > 0 for d in D):
        raise ValueError("nothing to schedule")
    table = inst.table
    n = inst.n
    bidx = inst.block_index
    best = None
    for config in inst.configurations:
        left = list(D)
        room = dict(caps) if caps is not None else None
        slots = []
        total = 0
        for b in config.blocks():
            i = bidx[b]
            pick, gain = -1, 0
            for j in range(n):
                if room is not None and room.get((i, j), 0) <= 0:
                    continue
                g = min(table[j][i], left[j])
                if g > gain:
                    pick, gain = j, g
            if pick >= 0:
                left[pick] -= gain
                if room is not None:
                    room[(i, pick)] -= 1
                total += gain
                slots.append((b, inst.jobs[pick].id))
            else:
                slots.append((b, None))
        if best is None or total > best[2]:
            best = (config, tuple(slots), total)
    return best


def htf_batches(inst: Instance, D0: Sequence[int],
                caps: Optional[Mapping[tuple, int]] = None) -> Iterator[Batch]:
    """Yield the batches of highest-throughput-first until demand is met.

    ``caps`` maps ``(block index, job index)`` to the number of blocks of that
    type the job may still receive; pairs not listed are forbidden.  Without
    caps every pair is allowed and unbounded.
    """
    D = [int(d) for d in D0]
    table = inst.table
    bidx = inst.block_index
    jidx = inst.job_index
    left = dict(caps) if caps is not None else None
    step = 0
    while sum(D) > 0:
        config, slots, tp = max_throughput_machine(inst, D, left)
        if tp <= 0:
            raise InfeasibleError("stuck: no machine serves the remaining demand")
        contrib: dict = {}
        biggest: dict = {}
        uses: dict = {}
        for b, jid in slots:
            if jid is None:
                continue
            j, i = jidx[jid], bidx[b]
            f = table[j][i]
            contrib[j] = contrib.get(j, 0) + f
            biggest[j] = max(biggest.get(j, 0), min(f, D[j]))
            uses[(i, j)] = uses.get((i, j), 0) + 1
        count = min((D[j] - biggest[j]) // contrib[j] + 1 for j in contrib)
        if left is not None:
            count = min([count] + [left[p] // u for p, u in uses.items()])
            for p, u in uses.items():
                left[p] -= u * count
        for j, c in contrib.items():
            D[j] = max(0, D[j] - count * c)
        yield Batch(step, config, slots, tp, count)
        step += 1


def highest_throughput_first(inst: Instance, caps: Optional[Mapping[tuple, int]] = None,
                             D0: Optional[Sequence[int]] = None) -> Schedule:
    if inst.is_numerical:
        raise KindMismatch("highest-throughput-first needs a combinatorial instance")
    D0 = inst.demands if D0 is None else D0
    uses = [MachineUse(bt.count, bt.configuration, bt.assignment)
            for bt in htf_batches(inst, D0, caps)]
    return Schedule(tuple(uses)).merged()


def multiset_multicover_greedy(requirements: Mapping, configurations: Sequence[Configuration]
                               ) -> list[tuple[Configuration, int]]:
    """Greedy cover of block requirements by configurations.

    Returns ``[(configuration, count), ...]`` in pick order.  Identical
    consecutive picks are batched: while a configuration still fits entirely
    inside the residual it stays the best choice, so we take it as many times
    as it fits at once.
    """
    residual = {b: int(r) for b, r in requirements.items() if r > 0}
    for b in residual:
        if not any(c.count(b) > 0 for c in configurations):
            raise InfeasibleError("block type %r appears in no configuration" % (b,))
    plan: list[tuple[Configuration, int]] = []
    while residual:
        best, score = None, 0
        for c in configurations:
            s = sum(min(a, residual.get(b, 0)) for b, a in c.counts)
            if s > score:
                best, score = c, s
        times = 1
        if score == best.size:
            times = min(residual[b] // a for b, a in best.counts)
        for b, a in best.counts:
            if b in residual:
                residual[b] = max(0, residual[b] - a * times)
                if residual[b] == 0:
                    del residual[b]
        if plan and plan[-1][0] == best:
            plan[-1] = (best, plan[-1][1] + times)
        else:
            plan.append((best, times))
    return plan


def cover_schedule(requirements: Mapping, configurations: Sequence[Configuration]) -> Schedule:
    """The multicover as an idle-block schedule (for inspection and tests)."""
    plan = multiset_multicover_greedy(requirements, configurations)
    return Schedule(tuple(MachineUse.idle(c, m) for c, m in plan)).merged()


def split_lp_solution(xstar: Mapping[tuple, Fraction], inst: Instance) -> SplitSolution:
    """Split ``x*`` keyed by ``(block, job id)`` into floor and filtered, doubled remainder."""
    k = len(inst.blocks)
    integer: dict = {}
    frac: dict = {}
    z: dict = {}
    for key, v in xstar.items():
        v = Fraction(v)
        fl = math.floor(v)
        integer[key] = fl
        z[key] = v - fl
    by_job: dict = {}
    for (b, jid), zz in z.items():
        job = inst.jobs[inst.job_index[jid]]
        by_job[jid] = max(by_job.get(jid, Fraction(0)), job.f(b) * zz)
    half_k = Fraction(1, 2 * k)
    for (b, jid), zz in z.items():
        job = inst.jobs[inst.job_index[jid]]
        if zz < half_k or job.f(b) * zz < by_job[jid] / k:
            frac[(b, jid)] = Fraction(0)
        else:
            frac[(b, jid)] = 2 * zz
    return SplitSolution(integer, frac)


def lp_solution(inst: Instance) -> dict:
    """Extreme-point optimum of the relaxation as ``{(block, job id): x}``."""
    lp = build_cms_lp(inst)
    sol = solve_min(lp)
    if not sol.feasible:
        raise InfeasibleError("infeasible LP: some job cannot be served")
    return {(b, j.id): sol.values[x_var(b, j.id)] for j in inst.jobs for b in inst.blocks}


def solve_greedy_log(inst: Instance) -> Schedule:
    if inst.is_numerical:
        raise KindMismatch("greedy-log needs a combinatorial instance")
    if sum(inst.demands) == 0:
        return Schedule()
    xstar = lp_solution(inst)
    # pairs with f = 0 contribute nothing; dropping them keeps covers small
    for (b, jid) in list(xstar):
        if inst.jobs[inst.job_index[jid]].f(b) == 0:
            xstar[(b, jid)] = Fraction(0)
    split = split_lp_solution(xstar, inst)

    req: dict = {}
    alloc = []
    for j in inst.jobs:
        for b in inst.blocks:
            cnt = split.integer_part[(b, j.id)]
            if cnt > 0:
                req[b] = req.get(b, 0) + cnt
                alloc.append((b, j.id, cnt))
    alloc.sort(key=lambda t: inst.block_index[t[0]])
    s1 = realize(multiset_multicover_greedy(req, inst.configurations), alloc)

    caps: dict = {}
    D2 = []
    for jn, j in enumerate(inst.jobs):
        reach = 0
        for i, b in enumerate(inst.blocks):
            c = math.ceil(split.fractional_part[(b, j.id)])
            if c > 0:
                caps[(i, jn)] = c
                reach += c * j.f(b)
        D2.append(min(j.demand, reach))
    s2 = highest_throughput_first(inst, caps, D2) if sum(D2) > 0 else Schedule()
    return s1.scaled(2) + s2.scaled(2)
