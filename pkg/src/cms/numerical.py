"""Numerical variant: any multiset of block sizes up to the capacity ``k``.

Each job independently picks the cheapest (by total size) multiset of block
sizes covering its demand, an unbounded min-knapsack.  All chosen blocks are
then packed first-fit in decreasing size order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .model import (Configuration, InfeasibleError, Instance, Job, KindMismatch, MachineUse,
                    Schedule)

EXACT_THRESHOLD = 10**5


@dataclass(frozen=True)
class BlockMultiset:
    counts: dict = field(default_factory=dict)   # size -> count

    @property
    def total_size(self) -> int:
        return sum(s * c for s, c in self.counts.items())

    def total_value(self, job: Job) -> int:
        return sum(c * job.f(s) for s, c in self.counts.items())

    def sizes(self) -> list[int]:
        return sorted((s for s, c in self.counts.items() for _ in range(c)), reverse=True)

    @classmethod
    def from_sizes(cls, sizes) -> "BlockMultiset":
        counts: dict = {}
        for s in sorted(sizes):
            counts[s] = counts.get(s, 0) + 1
        return cls(counts)


def _values(job: Job, k: int) -> np.ndarray:
    return np.asarray([job.f(i) for i in range(1, k + 1)], dtype=np.int64)


def min_knapsack_cost_table(job: Job, k: int) -> np.ndarray:
    """``table[v]`` = least total size covering ``v`` demand units, for ``v <= d``."""
    return _kernels.knapsack_min_cost(_values(job, k), job.demand)


def min_knapsack_exact(job: Job, k: int) -> BlockMultiset:
    """Cheapest covering multiset; among optima, the lexicographically smallest
    ascending size sequence."""
    d = job.demand
    if d <= 0:
        return BlockMultiset()
    vals = _values(job, k)
    if not vals.any():
        raise InfeasibleError("job %s has an all-zero table" % job.id)
    cost = _kernels.knapsack_min_cost(vals, d)
    sizes = []
    v = d
    while v > 0:
        for i in range(1, k + 1):
            f = int(vals[i - 1])
            if f > 0 and cost[v] == i + cost[max(0, v - f)]:
                sizes.append(i)
                v = max(0, v - f)
                break
    return BlockMultiset.from_sizes(sizes)


def _best_value_table(vals: np.ndarray, cap: int) -> tuple[list[int], list[int]]:
    """Unbounded max-value knapsack by capacity, with the last item per capacity."""
    k = len(vals)
    best = [0] * (cap + 1)
    last = [0] * (cap + 1)
    for c in range(1, cap + 1):
        best[c], last[c] = best[c - 1], 0
        for i in range(1, min(k, c) + 1):
            v = best[c - i] + int(vals[i - 1])
            if v > best[c]:
                best[c], last[c] = v, i
    return best, last


def min_knapsack_large(job: Job, k: int) -> BlockMultiset:
    """Exact for any demand, in time independent of ``d``.

    Let ``s`` be the size with the best value per unit of size.  An exchange
    argument shows that some optimum has fewer than ``s`` blocks of other
    sizes: among any ``s`` blocks some subset has total size divisible by
    ``s`` and can be replaced by copies of ``s`` without losing value.  So it
    is enough to try every budget up to ``(s-1)k`` for the other blocks and
    fill the rest with ``s``.
    """
    d = job.demand
    if d <= 0:
        return BlockMultiset()
    vals = _values(job, k)
    if not vals.any():
        raise InfeasibleError("job %s has an all-zero table" % job.id)
    star = max(range(1, k + 1), key=lambda i: (Fraction(int(vals[i - 1]), i), -i))
    fstar = int(vals[star - 1])
    cap = (star - 1) * k
    best, last = _best_value_table(vals, cap)
    choice = None
    for c in range(cap + 1):
        rest = max(0, d - best[c])
        total = c + star * (-(-rest // fstar))
        if choice is None or total < choice[0]:
            choice = (total, c, -(-rest // fstar))
    _, c, copies = choice
    sizes = [star] * copies
    while c > 0:
        if last[c] == 0:
            c -= 1
            continue
        sizes.append(last[c])
        c -= last[c]
    return BlockMultiset.from_sizes(sizes)


def min_knapsack_fptas(job: Job, k: int, eps=Fraction(1, 2),
                       exact_threshold: int = EXACT_THRESHOLD) -> BlockMultiset:
    """Covering multiset of total size at most ``(1+eps)`` times the optimum.

    Demands up to ``exact_threshold`` use the value-indexed DP.  Larger ones
    use ``min_knapsack_large``, which is also exact, so the bound holds with
    room to spare.
    """
    if Fraction(str(eps)) <= 0:
        raise ValueError("eps must be positive")
    if job.demand <= exact_threshold:
        return min_knapsack_exact(job, k)
    return min_knapsack_large(job, k)


def pack_blocks(multisets: Sequence[tuple[str, BlockMultiset]], k: int) -> Schedule:
    """First-fit over all blocks in decreasing size (job order breaks ties).

    Each machine is padded with idle size-1 blocks so its sizes total ``k``.
    """
    items = [(s, t, jid) for t, (jid, ms) in enumerate(multisets) for s in ms.sizes()]
    if any(s > k for s, _, _ in items):
        raise ValueError("block larger than capacity")
    items.sort(key=lambda it: (-it[0], it[1]))
    if not items:
        return Schedule()
    where = _kernels.first_fit(np.asarray([s for s, _, _ in items], dtype=np.int64), k)
    bins: list[list] = [[] for _ in range(int(where.max()) + 1)]
    for (s, _, jid), b in zip(items, where):
        bins[int(b)].append((s, jid))
    uses = []
    for content in bins:
        pad = k - sum(s for s, _ in content)
        slots = tuple(content) + ((1, None),) * pad
        uses.append(MachineUse(1, Configuration.of([s for s, _ in slots]), slots))
    return Schedule(tuple(uses)).merged()


@dataclass(frozen=True)
class NumericalResult:
    schedule: Schedule
    multisets: tuple
    lower_bound: Fraction      # valid lower bound on the optimum


def solve_numerical_detailed(inst: Instance, eps=Fraction(1, 2),
                             exact_threshold: int = EXACT_THRESHOLD) -> NumericalResult:
    if not inst.is_numerical:
        raise KindMismatch("the numerical solver needs a numerical instance")
    eps = Fraction(str(eps))
    k = inst.capacity
    chosen = tuple((j.id, min_knapsack_fptas(j, k, eps, exact_threshold)) for j in inst.jobs)
    work = sum(ms.total_size for _, ms in chosen)
    lb = Fraction(work, k) / (1 + eps)
    return NumericalResult(pack_blocks(chosen, k), chosen, lb)


def solve_numerical(inst: Instance, eps=Fraction(1, 2),
                    exact_threshold: Optional[int] = None) -> Schedule:
    th = EXACT_THRESHOLD if exact_threshold is None else exact_threshold
    return solve_numerical_detailed(inst, eps, th).schedule


def numerical_lower_bound(inst: Instance, eps=Fraction(1, 2)) -> Fraction:
    return solve_numerical_detailed(inst, eps).lower_bound
