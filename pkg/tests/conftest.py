from __future__ import annotations

from itertools import combinations_with_replacement, product

import pytest

from cms.model import Instance, Job
from cms.oracle import gen_tight_greedy_family, partitions


@pytest.fixture
def t1() -> Instance:
    return Instance.combinatorial(["b1"], [{"b1": 1}], [Job.make("j1", 5, {"b1": 5})])


@pytest.fixture
def tight3() -> Instance:
    return gen_tight_greedy_family(3)


def micro_opt(inst: Instance, limit: int = 16) -> int:
    """Brute force over machine multisets and per-job block vectors.

    Shares no code with the solvers: it tries every multiset of ``m``
    machines for ``m = 0, 1, ...`` and every way of handing blocks to jobs.
    Only for very small instances.
    """
    if inst.is_numerical:
        menu = [tuple(sum(1 for s in p if s == size) for size in inst.blocks)
                for p in partitions(inst.capacity)]
    else:
        menu = [tuple(c.count(b) for b in inst.blocks) for c in inst.configurations]
    nb = len(inst.blocks)
    for m in range(limit + 1):
        for machines in combinations_with_replacement(range(len(menu)), m):
            supply = [sum(menu[s][i] for s in machines) for i in range(nb)]
            per_job = []
            for j, row in enumerate(inst.table):
                opts = [v for v in product(*(range(c + 1) for c in supply))
                        if sum(a * f for a, f in zip(v, row)) >= inst.demands[j]]
                per_job.append(opts)
            if any(not o for o in per_job):
                continue
            for pick in product(*per_job):
                if all(sum(v[i] for v in pick) <= supply[i] for i in range(nb)):
                    return m
    raise AssertionError("no schedule within %d machines" % limit)
