from __future__ import annotations

import random
from fractions import Fraction as F
from itertools import combinations_with_replacement

import pytest
from hypothesis import given, settings, strategies as st

from cms.model import InfeasibleError, Instance, Job, KindMismatch, validate_schedule
from cms.numerical import (BlockMultiset, min_knapsack_exact, min_knapsack_fptas,
                           min_knapsack_large, pack_blocks, solve_numerical,
                           solve_numerical_detailed)
from cms.oracle import GenParams, exact_min_machines, gen_numerical_random

EXAMPLE = Job.make("j1", 6, {1: 1, 2: 3, 3: 4, 4: 5})


def _brute_knapsack(job, k):
    """Cheapest multiset, ties to the smallest ascending size tuple; ``None`` if infeasible."""
    useful = [s for s in range(1, k + 1) if job.f(s) > 0]
    best = None
    for r in range(job.demand + 1):
        for ms in combinations_with_replacement(useful, r):
            if sum(job.f(s) for s in ms) >= job.demand:
                cand = (sum(ms), tuple(sorted(ms)))
                if best is None or cand < best:
                    best = cand
    return best


def test_exact_examples():
    assert min_knapsack_exact(Job.make("z", 0, {1: 0}), 4).counts == {}
    m = min_knapsack_exact(EXAMPLE, 4)
    assert m.counts == {2: 2} and m.total_size == 4
    assert min_knapsack_exact(Job.make("a", 1, {1: 1, 2: 1}), 2).counts == {1: 1}
    with pytest.raises(InfeasibleError):
        min_knapsack_exact(Job.make("z", 3, {}), 3)


@settings(max_examples=120, deadline=None)
@given(k=st.integers(1, 4), d=st.integers(0, 9), seed=st.integers(0, 10**6))
def test_exact_matches_brute_force_with_tie_break(k, d, seed):
    rng = random.Random(seed)
    job = Job.make("j", d, {i: rng.randint(0, d) for i in range(1, k + 1)})
    ref = _brute_knapsack(job, k)
    if ref is None:
        with pytest.raises(InfeasibleError):
            min_knapsack_exact(job, k)
        return
    got = min_knapsack_exact(job, k)
    assert got.total_size == ref[0]
    assert tuple(sorted(got.sizes())) == ref[1]


@settings(max_examples=150, deadline=None)
@given(k=st.integers(1, 7), d=st.integers(1, 4000), seed=st.integers(0, 10**6))
def test_large_method_is_exact(k, d, seed):
    rng = random.Random(seed)
    tab = {i: rng.randint(0, min(d, 60)) for i in range(1, k + 1)}
    if not any(tab.values()):
        tab[k] = 1
    job = Job.make("j", d, tab)
    a, b = min_knapsack_exact(job, k), min_knapsack_large(job, k)
    assert a.total_size == b.total_size and b.total_value(job) >= d


def test_fptas_examples():
    assert min_knapsack_fptas(Job.make("z", 0, {1: 0}), 3, F(1, 2)).counts == {}
    assert min_knapsack_fptas(EXAMPLE, 4, F(1, 2)).total_size <= 6
    assert min_knapsack_fptas(Job.make("a", 2, {1: 2, 2: 2}), 2, F(1, 10)).total_size == 1
    big = Job.make("big", 10**7, {1: 3, 2: 7, 3: 10})
    m = min_knapsack_fptas(big, 3, F(1, 4))
    assert m.total_value(big) >= big.demand
    assert m.total_size == min_knapsack_large(big, 3).total_size
    with pytest.raises(ValueError):
        min_knapsack_fptas(EXAMPLE, 4, 0)


def test_pack_examples():
    s = pack_blocks([("a", BlockMultiset.from_sizes([2, 2, 3]))], 4)
    assert s.cost == 2
    assert [sorted(b for b, j in m.assignment if j) for m in s.machines] == [[3], [2, 2]]
    assert pack_blocks([("a", BlockMultiset.from_sizes([4]))], 4).cost == 1
    many = pack_blocks([("a", BlockMultiset.from_sizes([4] * 7))], 4)
    assert many.cost == 7 and len(many.machines) == 1


@settings(max_examples=80, deadline=None)
@given(k=st.integers(1, 8), sizes=st.lists(st.integers(1, 8), max_size=40))
def test_packing_half_full(k, sizes):
    sizes = [min(s, k) for s in sizes]
    sched = pack_blocks([("a", BlockMultiset.from_sizes(sizes))], k)
    loads = []
    for m in sched.machines:
        used = sum(b for b, j in m.assignment if j)
        assert sum(b for b, _ in m.assignment) == k
        loads += [used] * m.multiplicity
    assert sum(1 for u in loads if 2 * u <= k) <= 1
    assert sum(loads) == sum(sizes)


def test_solve_examples():
    one = Instance.numerical(4, [EXAMPLE])
    s = solve_numerical(one, F(1, 2))
    assert s.cost == 1 and validate_schedule(one, s) == []
    three = Instance.numerical(3, [Job.make("j%d" % i, 3, {3: 3}) for i in range(3)])
    assert solve_numerical(three).cost == 3
    idle = Instance.numerical(3, [Job.make("j", 0, {})])
    assert solve_numerical(idle).cost == 0
    with pytest.raises(KindMismatch):
        solve_numerical(Instance.combinatorial(["b1"], [["b1"]], []))


@pytest.mark.parametrize("seed", range(60))
def test_bound_against_oracle(seed):
    inst = gen_numerical_random(GenParams(n=1 + seed % 5, capacity=1 + seed % 5, max_demand=12,
                                          max_table=12, seed=seed))
    eps = F(1, 4)
    res = solve_numerical_detailed(inst, eps)
    opt = exact_min_machines(inst)
    assert validate_schedule(inst, res.schedule) == []
    assert res.schedule.cost <= 1 + 2 * (1 + eps) * opt
    assert res.lower_bound <= opt
    for job, (_, ms) in zip(inst.jobs, res.multisets):
        assert ms.total_value(job) >= job.demand


def test_forced_large_path_matches_exact():
    inst = gen_numerical_random(GenParams(n=5, capacity=5, max_demand=40, max_table=12, seed=9))
    a = solve_numerical(inst, F(1, 4))
    b = solve_numerical(inst, F(1, 4), exact_threshold=0)
    assert a.cost == b.cost
