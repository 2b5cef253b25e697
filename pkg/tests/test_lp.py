from __future__ import annotations

import random
from fractions import Fraction as F

import pytest

from cms.lp import (EQ, GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED, LinearProgram, block_set,
                    build_cms_lp, build_feasibility_lp, is_extreme_point, solve_min, to_lp_text,
                    x_var, y_var)
from cms.model import Instance, Job, KindMismatch


def test_single_lower_bound():
    lp = LinearProgram()
    lp.add_variable("x", 1)
    lp.add_constraint({"x": 1}, GE, 3)
    sol = solve_min(lp)
    assert sol.status == OPTIMAL and sol.values["x"] == 3 and sol.objective_value == 3


def test_fractional_vertex():
    lp = LinearProgram()
    lp.add_variable("x", 1)
    lp.add_variable("y", 1)
    lp.add_constraint({"x": 1, "y": 1}, GE, 2)
    lp.add_constraint({"x": 1}, LE, F(1, 2))
    lp.add_constraint({"x": 2, "y": -1}, GE, F(-1, 2))
    sol = solve_min(lp)
    assert sol.objective_value == 2
    assert is_extreme_point(lp, sol.values)


def test_unbounded_and_infeasible():
    lp = LinearProgram()
    lp.add_variable("x", -1)
    lp.add_constraint({"x": 1}, GE, 1)
    assert solve_min(lp).status == UNBOUNDED
    lp = LinearProgram()
    lp.add_variable("x", 1)
    lp.add_constraint({"x": 1}, LE, 1)
    lp.add_constraint({"x": 1}, GE, 2)
    assert solve_min(lp).status == INFEASIBLE


def test_redundant_equalities():
    lp = LinearProgram()
    for v in "abc":
        lp.add_variable(v, 1)
    lp.add_constraint({"a": 1, "b": 1}, EQ, 2)
    lp.add_constraint({"a": 2, "b": 2}, EQ, 4)
    lp.add_constraint({"c": 1, "a": 1}, GE, 1)
    sol = solve_min(lp)
    assert sol.objective_value == 2 and is_extreme_point(lp, sol.values)


def test_extreme_point_check_rejects_interior():
    lp = LinearProgram()
    lp.add_variable("x")
    lp.add_variable("y")
    lp.add_constraint({"x": 1, "y": 1}, LE, 2)
    assert is_extreme_point(lp, {"x": F(0), "y": F(0)})
    assert not is_extreme_point(lp, {"x": F(1, 2), "y": F(1, 2)})
    assert not is_extreme_point(lp, {"x": F(3), "y": F(0)})


def _scipy_fuzz(seed: int, trials: int):
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = random.Random(seed)
    for _ in range(trials):
        nv, nc = rng.randint(1, 6), rng.randint(0, 6)
        lp = LinearProgram()
        for i in range(nv):
            lp.add_variable("v%d" % i, rng.randint(-2, 4))
        for _ in range(nc):
            coeffs = {"v%d" % i: F(rng.randint(-3, 4), rng.randint(1, 3))
                      for i in range(nv) if rng.random() < 0.7}
            lp.add_constraint(coeffs, rng.choice([LE, GE, EQ]), F(rng.randint(-4, 8), rng.randint(1, 2)))
        sol = solve_min(lp)
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for con in lp.constraints:
            row = [float(con.coeffs.get("v%d" % i, 0)) for i in range(nv)]
            if con.sense == LE:
                a_ub.append(row)
                b_ub.append(float(con.rhs))
            elif con.sense == GE:
                a_ub.append([-x for x in row])
                b_ub.append(-float(con.rhs))
            else:
                a_eq.append(row)
                b_eq.append(float(con.rhs))
        c = [float(lp.objective.get("v%d" % i, 0)) for i in range(nv)]
        res = linprog(c, A_ub=a_ub or None, b_ub=b_ub or None, A_eq=a_eq or None,
                      b_eq=b_eq or None, bounds=[(0, None)] * nv, method="highs")
        yield lp, sol, res


def test_agrees_with_highs():
    status = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}
    for lp, sol, res in _scipy_fuzz(seed=11, trials=600):
        assert status[res.status] == sol.status
        if sol.status == OPTIMAL:
            assert abs(res.fun - float(sol.objective_value)) <= 1e-7
            assert is_extreme_point(lp, sol.values)


def test_cms_lp_structure(t1):
    lp = build_cms_lp(t1)
    assert lp.variables == [x_var("b1", "j1"), y_var(0)]
    assert [c.name for c in lp.constraints] == ["supply[b1]", "demand[j1]"]
    sol = solve_min(lp)
    assert sol.objective_value == 1


def test_cms_lp_rejects_numerical():
    with pytest.raises(KindMismatch):
        build_cms_lp(Instance.numerical(3, []))


def test_feasibility_lp_uses_only_bstar():
    inst = Instance.combinatorial(["b1", "b2"], [{"b1": 1}, {"b2": 1}],
                                  [Job.make("j1", 2, {"b1": 1, "b2": 2})])
    cstar = [inst.configurations[1]]
    assert block_set(cstar, inst) == ["b2"]
    lp = build_feasibility_lp(inst, cstar, {cstar[0]: 1})
    assert lp.variables == [x_var("b2", "j1")]
    assert not lp.objective
    assert solve_min(lp).feasible


def test_lp_text(t1):
    text = to_lp_text(build_cms_lp(t1))
    assert text.startswith("minimize\n  obj: y[0]\nsubject to\n")
    assert "  demand[j1]: 5 x[b1,j1] >= 5\n" in text
    assert text.endswith("end\n")
