"""Few-configurations algorithm: guess machine counts, solve a feasibility LP,
round its extreme point along a pseudo-forest.

For each non-empty subset ``C*`` of configurations and each tuple of machine
counts drawn from a geometric grid, the feasibility LP is solved.  The first
feasible tuple (in ascending total) gives an extreme point whose support graph
is a pseudo-forest; breaking the cycles and rounding parent edges down and
child edges up at twice the LP value gives an integral assignment that fits on
``2m + 1`` machines per chosen configuration.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Optional, Sequence

from .lp import block_set, build_feasibility_lp, solve_min, x_var
from .model import (CMSError, Configuration, GuardExceeded, InfeasibleError, Instance,
                    KindMismatch, Schedule, realize)

DEFAULT_MAX_CONFIGS = 6


def _as_fraction(eps) -> Fraction:
    return eps if isinstance(eps, Fraction) else Fraction(str(eps))


def grid_L(total_demand: int, eps) -> list[int]:
    """Floors of ``(1+eps)^i`` for ``i = 0, 1, ...`` up to the first power reaching ``total_demand``.

    Going one power past the floor of the logarithm guarantees the largest
    grid value is at least ``total_demand``, so every optimal machine count is
    dominated by some grid value within a ``1+eps`` factor.
    """
    eps = _as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if total_demand < 1:
        raise ValueError("total demand must be at least 1")
    base = 1 + eps
    out: list[int] = []
    p = Fraction(1)
    while True:
        v = math.floor(p)
        if not out or out[-1] != v:
            out.append(v)
        if p >= total_demand:
            return out
        p *= base


@dataclass
class AssignmentGraph:
    jobs: list
    blocks: list
    weight: dict = field(default_factory=dict)  # (block, job id) -> x > 0

    @property
    def edges(self) -> list:
        return list(self.weight)

    def adjacency(self) -> dict:
        adj: dict = {("j", j): [] for j in self.jobs}
        adj.update({("b", b): [] for b in self.blocks})
        for b, j in self.weight:
            adj[("j", j)].append(("b", b))
            adj[("b", b)].append(("j", j))
        return adj

    def components(self) -> list[list]:
        adj = self.adjacency()
        seen: set = set()
        comps = []
        for start in adj:
            if start in seen:
                continue
            comp, stack = [], [start]
            seen.add(start)
            while stack:
                u = stack.pop()
                comp.append(u)
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            comps.append(comp)
        return comps


def build_assignment_graph(values: Mapping[str, Fraction], inst: Instance, bstar: Sequence) -> AssignmentGraph:
    g = AssignmentGraph([j.id for j in inst.jobs], list(bstar))
    for b in bstar:
        for j in inst.jobs:
            x = values.get(x_var(b, j.id), Fraction(0))
            if x > 0:
                g.weight[(b, j.id)] = Fraction(x)
    return g


def check_pseudo_forest(g: AssignmentGraph) -> bool:
    adj = g.adjacency()
    for comp in g.components():
        edges = sum(len(adj[u]) for u in comp) // 2
        if edges > len(comp):
            return False
    return True


@dataclass
class RootedForest:
    """Parent pointers over graph nodes; ``removed`` holds dropped cycle edges."""

    parent: dict
    roots: list
    removed: list


def _cycle_nodes(comp: list, adj: dict) -> set:
    deg = {u: len(adj[u]) for u in comp}
    alive = set(comp)
    leaves = [u for u in comp if deg[u] <= 1]
    while leaves:
        u = leaves.pop()
        if u not in alive:
            continue
        alive.discard(u)
        for w in adj[u]:
            if w in alive:
                deg[w] -= 1
                if deg[w] == 1:
                    leaves.append(w)
    return alive


def break_cycles_and_root(g: AssignmentGraph, inst: Instance) -> RootedForest:
    if not check_pseudo_forest(g):
        raise CMSError("support graph is not a pseudo-forest; solution is not an extreme point")
    adj = g.adjacency()
    jpos = inst.job_index
    bpos = inst.block_index
    parent: dict = {}
    roots: list = []
    removed: list = []
    for comp in g.components():
        jobs = sorted((u for u in comp if u[0] == "j"), key=lambda u: jpos[u[1]])
        if not jobs:
            continue
        edges = sum(len(adj[u]) for u in comp) // 2
        local = {u: list(adj[u]) for u in comp}
        if edges == len(comp):
            cycle = _cycle_nodes(comp, adj)
            root = next(u for u in jobs if u in cycle)
            b1, b2 = sorted((w for w in adj[root] if w in cycle), key=lambda w: bpos[w[1]])
            j = root[1]
            job = inst.jobs[jpos[j]]
            p1 = g.weight[(b1[1], j)] * job.f(b1[1])
            p2 = g.weight[(b2[1], j)] * job.f(b2[1])
            drop = b2 if p1 >= p2 else b1
            local[root].remove(drop)
            local[drop].remove(root)
            removed.append((drop[1], j))
        else:
            root = jobs[0]
        roots.append(root)
        parent[root] = None
        stack = [root]
        while stack:
            u = stack.pop()
            for w in local[u]:
                if w not in parent:
                    parent[w] = u
                    stack.append(w)
    return RootedForest(parent, roots, removed)


def round_tree(forest: RootedForest, g: AssignmentGraph) -> dict:
    """Integral block counts ``{(block, job id): count}``: parent edges floor(2x), child edges ceil(2x)."""
    out: dict = {}
    for (b, j), x in g.weight.items():
        if (b, j) in forest.removed:
            out[(b, j)] = 0
        elif forest.parent.get(("j", j)) == ("b", b):
            out[(b, j)] = math.floor(2 * x)
        else:
            out[(b, j)] = math.ceil(2 * x)
    return out


def _tuples_by_sum(grid: Sequence[int], width: int):
    """Index tuples into ``grid`` ordered by the sum of grid values, then lexicographically."""
    start = (0,) * width
    heap = [(grid[0] * width, start)]
    seen = {start}
    while heap:
        total, idx = heapq.heappop(heap)
        yield total, idx
        for t in range(width):
            if idx[t] + 1 < len(grid):
                nxt = idx[:t] + (idx[t] + 1,) + idx[t + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (total - grid[idx[t]] + grid[idx[t] + 1], nxt))


def _supply_covers(inst: Instance, bstar: Sequence, supply: Mapping) -> bool:
    """Cheap necessary condition: each job alone fits in the supplied blocks."""
    for j in inst.jobs:
        if sum(supply[b] * j.f(b) for b in bstar) < j.demand:
            return False
    return True


@dataclass
class Candidate:
    cstar: tuple
    m: dict
    cost: int
    x: dict


@dataclass
class TraceEntry:
    cstar: tuple
    m: dict
    lp: object
    solution: object
    graph: AssignmentGraph
    bstar: list


def fixed_configs_candidate(inst: Instance, cstar: Sequence[Configuration], eps,
                            limit: Optional[int] = None,
                            trace: Optional[list] = None) -> Optional[Candidate]:
    """Best rounded solution for one subset ``C*``, or ``None``.

    ``limit``: tuples whose cost could not beat it are skipped (this does not
    change the overall result, because later tuples only cost more).
    """
    grid = grid_L(max(1, sum(inst.demands)), eps)
    bstar = block_set(cstar, inst)
    width = len(cstar)

    def supply_of(m):
        return {b: sum(m[c] * c.count(b) for c in cstar) for b in bstar}

    top = {c: grid[-1] for c in cstar}
    if not _supply_covers(inst, bstar, supply_of(top)):
        return None
    if not solve_min(build_feasibility_lp(inst, cstar, top)).feasible:
        return None
    failed: list = []
    for total, idx in _tuples_by_sum(grid, width):
        cost = 2 * total + width
        if limit is not None and cost >= limit:
            return None
        m = {c: grid[t] for c, t in zip(cstar, idx)}
        supply = supply_of(m)
        if not _supply_covers(inst, bstar, supply):
            continue
        if any(all(supply[b] <= s[b] for b in bstar) for s in failed):
            continue
        lp = build_feasibility_lp(inst, cstar, m)
        sol = solve_min(lp)
        if not sol.feasible:
            failed.append(supply)
            continue
        g = build_assignment_graph(sol.values, inst, bstar)
        if trace is not None:
            trace.append(TraceEntry(tuple(cstar), m, lp, sol, g, bstar))
        forest = break_cycles_and_root(g, inst)
        return Candidate(tuple(cstar), m, cost, round_tree(forest, g))
    return None


def _subsets(configs: Sequence[Configuration]):
    idx = range(len(configs))
    for r in range(1, len(configs) + 1):
        for combo in combinations(idx, r):
            yield tuple(configs[i] for i in combo)


def check_rounded(inst: Instance, cand: Candidate) -> bool:
    """Exact re-check of the covering constraints for an integral candidate."""
    for b in block_set(cand.cstar, inst):
        supply = sum((2 * cand.m[c] + 1) * c.count(b) for c in cand.cstar)
        if sum(cand.x.get((b, j.id), 0) for j in inst.jobs) > supply:
            return False
    for j in inst.jobs:
        if sum(j.f(b) * cnt for (b, jid), cnt in cand.x.items() if jid == j.id) < j.demand:
            return False
    return True


def fixed_configs_search(inst: Instance, eps, max_configs: int = DEFAULT_MAX_CONFIGS,
                         trace: Optional[list] = None) -> Optional[Candidate]:
    if inst.is_numerical:
        raise KindMismatch("the few-configurations algorithm needs a combinatorial instance")
    if len(inst.configurations) > max_configs:
        raise GuardExceeded("%d configurations exceed the guard of %d"
                            % (len(inst.configurations), max_configs))
    best: Optional[Candidate] = None
    for cstar in _subsets(inst.configurations):
        bstar = set(block_set(cstar, inst))
        if any(j.demand > 0 and not any(j.f(b) > 0 for b in bstar) for j in inst.jobs):
            continue
        cand = fixed_configs_candidate(inst, cstar, eps,
                                       limit=None if best is None else best.cost, trace=trace)
        if cand is not None and (best is None or cand.cost < best.cost):
            best = cand
    return best


def solve_fixed_configs(inst: Instance, eps=Fraction(1, 2),
                        max_configs: int = DEFAULT_MAX_CONFIGS,
                        trace: Optional[list] = None) -> Schedule:
    if inst.is_numerical:
        raise KindMismatch("the few-configurations algorithm needs a combinatorial instance")
    if sum(inst.demands) == 0:
        return Schedule()
    best = fixed_configs_search(inst, eps, max_configs, trace)
    if best is None:
        raise InfeasibleError("no configuration subset and machine counts are feasible")
    if not check_rounded(inst, best):
        raise CMSError("rounded solution violates the covering constraints")
    plan = [(c, 2 * best.m[c] + 1) for c in best.cstar]
    score = {}
    for (b, jid), cnt in best.x.items():
        score[(b, jid)] = inst.jobs[inst.job_index[jid]].f(b) * cnt
    alloc = sorted(((b, jid, cnt) for (b, jid), cnt in best.x.items() if cnt > 0),
                   key=lambda t: (inst.block_index[t[0]], -score[(t[0], t[1])],
                                  inst.job_index[t[1]]))
    return realize(plan, alloc)
