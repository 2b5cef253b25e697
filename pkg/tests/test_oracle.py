from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from cms.model import Configuration, GuardExceeded, InfeasibleError, Instance, Job, validate_schedule
from cms.oracle import (GenParams, brute_max_throughput, exact_min_machines, exact_schedule,
                        gen_numerical_random, gen_random, gen_tight_greedy_family, partitions)

from conftest import micro_opt


def test_examples(t1, tight3):
    assert exact_min_machines(t1) == 1
    assert exact_min_machines(tight3) == 2
    zero = Instance.combinatorial(["b1"], [["b1"]], [Job.make("j1", 3, {})])
    with pytest.raises(InfeasibleError):
        exact_min_machines(zero)


def test_budget_is_reported():
    inst = gen_random(GenParams(n=5, blocks=3, configs=3, seed=4))
    with pytest.raises(GuardExceeded):
        exact_min_machines(inst, budget=1)


def test_env_budget(monkeypatch):
    monkeypatch.setenv("CMS_NODE_BUDGET", "1")
    with pytest.raises(GuardExceeded):
        exact_min_machines(gen_random(GenParams(n=5, seed=4)))


def test_brute_throughput_examples(t1):
    two = Instance.combinatorial(["b1", "b2"], [["b1", "b2"]],
                                 [Job.make("j1", 3, {"b1": 3, "b2": 3}),
                                  Job.make("j2", 3, {"b1": 2, "b2": 1})])
    assert brute_max_throughput(two, [3, 3], two.configurations[0]) == 5
    assert brute_max_throughput(t1, [5], t1.configurations[0]) == 5
    assert brute_max_throughput(two, [0, 0], two.configurations[0]) == 0
    with pytest.raises(GuardExceeded):
        brute_max_throughput(t1, [5], Configuration.of(["b1"] * 7))


def test_partitions():
    assert partitions(4) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    assert [len(partitions(k)) for k in range(1, 8)] == [1, 2, 3, 5, 7, 11, 15]


def test_generators_deterministic():
    a = gen_random(GenParams(seed=1))
    assert a == gen_random(GenParams(seed=1))
    empty = gen_random(GenParams(n=0, seed=1))
    assert empty.n == 0 and exact_min_machines(empty) == 0
    tiny = gen_random(GenParams(n=20, max_demand=1, seed=2))
    assert set(tiny.demands) <= {0, 1}


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_generated_instances_are_valid(seed):
    from cms.model import validate_instance
    inst = gen_random(GenParams(n=4, blocks=3, configs=2, seed=seed))
    assert validate_instance(inst) == []
    for b in inst.blocks:
        assert any(c.count(b) for c in inst.configurations)
    num = gen_numerical_random(GenParams(n=4, capacity=4, seed=seed))
    assert validate_instance(num) == []


def test_tight_family_formulas():
    i3 = gen_tight_greedy_family(3)
    assert i3.blocks == (1, 2, 3, 4) and i3.demands == [2, 4, 8]
    assert gen_tight_greedy_family(2).demands == [2, 4]
    assert i3.jobs[2].f(3) == 4 and i3.jobs[2].f(4) == 8
    with pytest.raises(ValueError):
        gen_tight_greedy_family(1)


@pytest.mark.parametrize("seed", range(40))
def test_exact_matches_micro_brute_force(seed):
    inst = gen_random(GenParams(n=1 + seed % 3, blocks=1 + seed % 2, configs=1 + seed % 2,
                                max_config_size=2, max_demand=4, max_table=4, seed=seed))
    assert exact_min_machines(inst) == micro_opt(inst)
    sched = exact_schedule(inst)
    assert validate_schedule(inst, sched) == [] and sched.cost == micro_opt(inst)


@pytest.mark.parametrize("seed", range(30))
def test_exact_numerical_matches_micro_brute_force(seed):
    inst = gen_numerical_random(GenParams(n=1 + seed % 3, capacity=1 + seed % 4, max_demand=5,
                                          max_table=5, seed=seed))
    assert exact_min_machines(inst) == micro_opt(inst)
    assert validate_schedule(inst, exact_schedule(inst)) == []
