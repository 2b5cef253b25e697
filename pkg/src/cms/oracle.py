"""Ground truth for small instances, plus instance generators.

``exact_min_machines`` is an iterative-deepening search.  Each job chooses one
of its minimal block-count vectors.  A memoized cover function gives the
fewest machines that supply a block multiset, and the search bounds on it.
Both instance kinds are supported.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .model import (Configuration, GuardExceeded, InfeasibleError, Instance, Job,
                    Schedule, realize)

DEFAULT_NODE_BUDGET = 10**7
MAX_BRUTE_SLOTS = 6


def node_budget() -> int:
    return int(os.environ.get("CMS_NODE_BUDGET", DEFAULT_NODE_BUDGET))


def partitions(k: int) -> list[tuple[int, ...]]:
    """Partitions of ``k`` as non-increasing tuples, largest parts first."""
    out: list[tuple[int, ...]] = []

    def rec(left: int, cap: int, acc: list[int]) -> None:
        if left == 0:
            out.append(tuple(acc))
            return
        for p in range(min(left, cap), 0, -1):
            acc.append(p)
            rec(left - p, p, acc)
            acc.pop()

    rec(k, k, [])
    return out


def machine_menu(inst: Instance) -> list[Configuration]:
    """Configurations the exact search may open (maximal ones for numerical)."""
    if inst.is_numerical:
        return [Configuration.of(p) for p in partitions(inst.capacity)]
    return list(inst.configurations)


def _minimal_vectors(f: Sequence[int], d: int, allowed: Sequence[bool]) -> list[tuple[int, ...]]:
    """All componentwise-minimal ``v`` with ``sum v_i f_i >= d``."""
    b = len(f)
    if d <= 0:
        return [(0,) * b]
    out = []
    v = [0] * b

    def rec(i: int, got: int) -> None:
        if got >= d:
            cand = tuple(v)
            if all(c == 0 or got - f[t] < d for t, c in enumerate(cand)):
                out.append(cand)
            return
        if i == b:
            return
        if not allowed[i] or f[i] <= 0:
            rec(i + 1, got)
            return
        top = -(-(d - got) // f[i])
        for c in range(top + 1):
            v[i] = c
            rec(i + 1, got + c * f[i])
        v[i] = 0

    rec(0, 0)
    return out


def _fits_inside(a: tuple, b: tuple, sizes: Sequence[int]) -> bool:
    """Numerical dominance: every block of ``a`` can take the place of a distinct, no smaller block of ``b``."""
    xa = sorted((s for s, c in zip(sizes, a) for _ in range(c)), reverse=True)
    xb = sorted((s for s, c in zip(sizes, b) for _ in range(c)), reverse=True)
    return len(xa) <= len(xb) and all(p <= q for p, q in zip(xa, xb))


def job_options(inst: Instance) -> list[list[tuple[int, ...]]]:
    """Per job, the non-dominated block-count vectors that satisfy it."""
    menu = machine_menu(inst)
    usable = [any(c.count(blk) for c in menu) for blk in inst.blocks]
    opts = []
    for j, row in enumerate(inst.table):
        vecs = _minimal_vectors(row, inst.demands[j], usable)
        if inst.is_numerical and len(vecs) > 1:
            vecs.sort(key=lambda v: (sum(s * c for s, c in zip(inst.blocks, v)), sum(v)))
            keep: list = []
            for v in vecs:
                if not any(_fits_inside(u, v, inst.blocks) for u in keep):
                    keep.append(v)
            vecs = keep
        opts.append(vecs)
    return opts


class _Cover:
    """Memoized fewest machines covering a block-count vector."""

    def __init__(self, vectors: list[tuple[int, ...]]):
        self.vectors = vectors
        self.memo: dict = {}

    def __call__(self, s: tuple) -> int:
        return self._solve(s)[0]

    def _solve(self, s: tuple) -> tuple:
        hit = self.memo.get(s)
        if hit is not None:
            return hit
        first = next((i for i, c in enumerate(s) if c > 0), None)
        if first is None:
            res = (0, -1)
        else:
            res = (10**18, -1)
            for idx, vec in enumerate(self.vectors):
                if vec[first] > 0:
                    rest = tuple(max(0, a - c) for a, c in zip(s, vec))
                    val = self._solve(rest)[0] + 1
                    if val < res[0]:
                        res = (val, idx)
        self.memo[s] = res
        return res

    def plan(self, s: tuple) -> list[int]:
        out = []
        while any(s):
            _, idx = self._solve(s)
            out.append(idx)
            s = tuple(max(0, a - c) for a, c in zip(s, self.vectors[idx]))
        return out


def _search(inst: Instance, budget: Optional[int]):
    """Returns ``(m, choice, cover)`` with ``choice[j]`` the option picked for job ``j``."""
    budget = node_budget() if budget is None else budget
    menu = machine_menu(inst)
    vectors = [tuple(c.count(blk) for blk in inst.blocks) for c in menu]
    opts = job_options(inst)
    for j, o in enumerate(opts):
        if not o:
            raise InfeasibleError("job %s cannot be satisfied by any block" % inst.jobs[j].id)
    cover = _Cover(vectors)
    b = len(inst.blocks)
    zero = (0,) * b
    # most constrained jobs first
    order = sorted(range(inst.n), key=lambda j: (len(opts[j]), j))
    lower = max([min(cover(v) for v in o) for o in opts] + [0])
    nodes = 0
    m = lower
    while True:
        failed: set = set()
        choice: list = [None] * inst.n

        def dfs(depth: int, acc: tuple) -> bool:
            nonlocal nodes
            nodes += 1
            if nodes > budget:
                raise GuardExceeded("exact search exceeded %d nodes" % budget)
            if depth == len(order):
                return True
            key = (depth, acc)
            if key in failed:
                return False
            j = order[depth]
            for v in opts[j]:
                nxt = tuple(a + c for a, c in zip(acc, v))
                if cover(nxt) > m:
                    continue
                choice[j] = v
                if dfs(depth + 1, nxt):
                    return True
            failed.add(key)
            return False

        if dfs(0, zero):
            return m, choice, cover, menu
        m += 1


def exact_min_machines(inst: Instance, budget: Optional[int] = None) -> int:
    """Optimal machine count; ``GuardExceeded`` if the node budget runs out."""
    return _search(inst, budget)[0]


def exact_schedule(inst: Instance, budget: Optional[int] = None) -> Schedule:
    m, choice, cover, menu = _search(inst, budget)
    total = tuple(sum(col) for col in zip(*choice)) if choice else ()
    if not any(total):
        return Schedule()
    counts: dict = {}
    for idx in cover.plan(total):
        counts[idx] = counts.get(idx, 0) + 1
    plan = [(menu[idx], c) for idx, c in sorted(counts.items())]
    alloc = []
    for i, blk in enumerate(inst.blocks):
        for j, v in enumerate(choice):
            if v[i] > 0:
                alloc.append((blk, inst.jobs[j].id, v[i]))
    sched = realize(plan, alloc)
    assert sched.cost == m
    return sched


def brute_max_throughput(inst: Instance, D: Sequence[int], sigma: Configuration) -> int:
    """Exhaustive best throughput of one machine of shape ``sigma`` (idle slots allowed)."""
    slots = [inst.block_index[b] for b in sigma.blocks()]
    if len(slots) > MAX_BRUTE_SLOTS:
        raise GuardExceeded("configuration has %d slots; brute force allows %d"
                            % (len(slots), MAX_BRUTE_SLOTS))
    if inst.n == 0 or not slots:
        return 0
    table = np.asarray(inst.table, dtype=np.int64).reshape(inst.n, len(inst.blocks))
    return _kernels.brute_throughput(table, np.asarray(D, dtype=np.int64),
                                     np.asarray(slots, dtype=np.int64))


# -- generators -----------------------------------------------------------------

@dataclass(frozen=True)
class GenParams:
    n: int = 4
    blocks: int = 3
    configs: int = 3
    max_config_size: int = 3
    max_demand: int = 10
    max_table: int = 10
    seed: int = 0
    capacity: int = 4


def _random_jobs(rng: np.random.Generator, p: GenParams, blocks: list) -> list[Job]:
    jobs = []
    for t in range(p.n):
        d = int(rng.integers(0, p.max_demand + 1))
        hi = min(p.max_table, d)
        vals = rng.integers(0, hi + 1, size=len(blocks)) if hi > 0 else np.zeros(len(blocks), int)
        if d > 0 and not vals.any():
            vals[int(rng.integers(0, len(blocks)))] = int(rng.integers(1, hi + 1))
        jobs.append(Job.make("j%d" % (t + 1), d,
                             {b: int(v) for b, v in zip(blocks, vals) if v > 0}))
    return jobs


def gen_random(p: GenParams) -> Instance:
    """Random combinatorial instance; every block type appears in some configuration."""
    rng = np.random.default_rng(p.seed)
    blocks = ["b%d" % (i + 1) for i in range(p.blocks)]
    configs: list[Configuration] = []
    tries = 0
    while len(configs) < p.configs and tries < 100 * p.configs:
        tries += 1
        size = int(rng.integers(1, p.max_config_size + 1))
        picks = rng.integers(0, p.blocks, size=size)
        c = Configuration.of({blocks[i]: int((picks == i).sum()) for i in sorted(set(picks.tolist()))})
        if c not in configs:
            configs.append(c)
    missing = [b for b in blocks if not any(c.count(b) for c in configs)]
    for t, b in enumerate(missing):
        # fold an uncovered block into an existing configuration (or start one)
        if configs and len(configs) >= p.configs:
            c = configs[t % len(configs)]
            merged = Configuration.of({**c.as_dict(), b: 1})
            if merged.size <= p.max_config_size and merged not in configs:
                configs[t % len(configs)] = merged
                continue
        configs.append(Configuration.of({b: 1}))
    return Instance.combinatorial(blocks, configs, _random_jobs(rng, p, blocks))


def gen_numerical_random(p: GenParams) -> Instance:
    rng = np.random.default_rng(p.seed)
    blocks = list(range(1, p.capacity + 1))
    return Instance.numerical(p.capacity, _random_jobs(rng, p, blocks))


def gen_tight_greedy_family(n: int) -> Instance:
    """Two configurations, one big block type ``n+1`` and one of each small type.

    Job ``l`` has demand ``2^l``; one small block ``l`` serves ``2^(l-1)`` and
    the big block serves it fully.  Two machines of the small-block
    configuration suffice, while highest-throughput-first opens ``n`` big ones.
    """
    if n < 2:
        raise ValueError("family needs n >= 2")
    k = n + 1
    blocks = list(range(1, k + 1))
    configs = [{k: 1}, {i: 1 for i in range(1, n + 1)}]
    jobs = [Job.make("j%d" % l, 2 ** l, {l: 2 ** (l - 1), k: 2 ** l}) for l in range(1, n + 1)]
    return Instance.combinatorial(blocks, configs, jobs)
