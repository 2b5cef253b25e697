"""Exact rational minimization LPs and the scheduling LP builders.

``solve_min`` is a two-phase primal simplex over a fraction-free integer
tableau (every entry stays an integer; a common denominator is carried
alongside), using Bland's rule so it always terminates.  Returned values are
``Fraction`` objects and are an extreme point of the feasible region.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping, Optional, Sequence

from .model import Configuration, Instance, KindMismatch

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, GE, EQ = "<=", ">=", "=="


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[str, Fraction]
    sense: str
    rhs: Fraction
    name: str = ""


@dataclass
class LinearProgram:
    """``min objective·x`` subject to ``constraints`` and ``x >= 0``."""

    variables: list[str] = field(default_factory=list)
    objective: dict[str, Fraction] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)

    def add_variable(self, name: str, cost=0) -> str:
        self.variables.append(name)
        if cost:
            self.objective[name] = Fraction(cost)
        return name

    def add_constraint(self, coeffs: Mapping[str, object], sense: str, rhs, name: str = "") -> None:
        if sense not in (LE, GE, EQ):
            raise ValueError("bad constraint sense %r" % (sense,))
        clean = {v: Fraction(c) for v, c in coeffs.items() if c != 0}
        self.constraints.append(Constraint(clean, sense, Fraction(rhs), name))

    def check(self) -> None:
        declared = set(self.variables)
        if len(declared) != len(self.variables):
            raise ValueError("duplicate variable names")
        for v in self.objective:
            if v not in declared:
                raise ValueError("objective references undeclared variable %r" % (v,))
        for c in self.constraints:
            for v in c.coeffs:
                if v not in declared:
                    raise ValueError("constraint %r references undeclared variable %r" % (c.name, v))


@dataclass(frozen=True)
class BasicSolution:
    status: str
    values: dict[str, Fraction] = field(default_factory=dict)
    objective_value: Optional[Fraction] = None

    @property
    def feasible(self) -> bool:
        return self.status == OPTIMAL


def _integer_row(coeffs: Sequence[Fraction]) -> list[int]:
    scale = 1
    for c in coeffs:
        scale = lcm(scale, c.denominator)
    return [int(c * scale) for c in coeffs]


class _Tableau:
    """Integer tableau; true entry = stored entry / ``den``.  Basic columns read ``den·e_row``."""

    def __init__(self, rows: list[list[int]], basis: list[int]):
        self.rows = rows
        self.basis = basis
        self.den = 1

    def pivot(self, r: int, c: int, extra: list[list[int]]) -> None:
        rows = self.rows
        q = rows[r][c]
        den = self.den
        prow = rows[r]
        for row in rows + extra:
            if row is prow:
                continue
            a = row[c]
            if a == 0:
                if q != den:
                    for j in range(len(row)):
                        if row[j]:
                            row[j] = row[j] * q // den
                continue
            for j in range(len(row)):
                row[j] = (q * row[j] - a * prow[j]) // den
        self.basis[r] = c
        self.den = q
        if q < 0:
            for row in rows + extra:
                for j in range(len(row)):
                    row[j] = -row[j]
            self.den = -q

    def run(self, obj: list[int], allowed: Sequence[bool]) -> str:
        """Bland's-rule simplex on objective row ``obj`` (reduced costs ``obj[j]/den``)."""
        rows = self.rows
        ncols = len(allowed)
        while True:
            enter = -1
            for j in range(ncols):
                if allowed[j] and obj[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return OPTIMAL
            best = -1
            for i, row in enumerate(rows):
                a = row[enter]
                if a <= 0:
                    continue
                if best < 0:
                    best = i
                    continue
                b = rows[best]
                lhs = row[-1] * b[enter]
                rhs = b[-1] * a
                if lhs < rhs or (lhs == rhs and self.basis[i] < self.basis[best]):
                    best = i
            if best < 0:
                return UNBOUNDED
            self.pivot(best, enter, [obj])


def solve_min(lp: LinearProgram) -> BasicSolution:
    """Solve ``lp`` exactly; report infeasible/unbounded through ``status``.

    An all-zero objective is treated as a pure feasibility problem and only
    phase 1 runs; the phase-1 basic feasible solution is returned.
    """
    lp.check()
    nvar = len(lp.variables)
    index = {v: i for i, v in enumerate(lp.variables)}

    # Normalize every constraint to a nonnegative right-hand side.
    normal = []
    for con in lp.constraints:
        dense = [Fraction(0)] * nvar
        for v, c in con.coeffs.items():
            dense[index[v]] = c
        sense, rhs = con.sense, con.rhs
        if rhs < 0:
            dense = [-c for c in dense]
            rhs = -rhs
            sense = {LE: GE, GE: LE, EQ: EQ}[sense]
        if sense == GE and rhs == 0:
            dense = [-c for c in dense]
            sense = LE
        normal.append((dense, sense, rhs))

    n_slack = sum(1 for _, s, _ in normal if s != EQ)
    n_art = sum(1 for _, s, _ in normal if s != LE)
    ncols = nvar + n_slack + n_art
    rows: list[list[int]] = []
    basis: list[int] = []
    art_rows: list[int] = []
    s_col = nvar
    a_col = nvar + n_slack
    for dense, sense, rhs in normal:
        # Slack and artificial scales are free, so they keep coefficient 1
        # and the integer rows start with den = 1.
        ints = _integer_row(dense + [rhs])
        row = ints[:nvar] + [0] * (n_slack + n_art) + [ints[nvar]]
        if sense == LE:
            row[s_col] = 1
            basis.append(s_col)
            s_col += 1
        else:
            if sense == GE:
                row[s_col] = -1
                s_col += 1
            row[a_col] = 1
            basis.append(a_col)
            art_rows.append(len(rows))
            a_col += 1
        rows.append(row)
    tab = _Tableau(rows, basis)

    is_art = [False] * ncols
    for c in range(nvar + n_slack, ncols):
        is_art[c] = True
    allowed = [not a for a in is_art]

    if n_art:
        w = [0] * (ncols + 1)
        for i in art_rows:
            for j in range(ncols + 1):
                w[j] -= rows[i][j]
        for c in range(nvar + n_slack, ncols):
            w[c] = 0
        tab.run(w, allowed)
        if w[-1] != 0:
            return BasicSolution(INFEASIBLE)
        # Drive zero-valued artificials out of the basis; drop redundant rows.
        i = 0
        while i < len(tab.rows):
            if is_art[tab.basis[i]]:
                row = tab.rows[i]
                col = next((j for j in range(nvar + n_slack) if row[j] != 0), -1)
                if col < 0:
                    del tab.rows[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, col, [])
            i += 1
        for row in tab.rows:
            for c in range(nvar + n_slack, ncols):
                row[c] = 0

    cost = [lp.objective.get(v, Fraction(0)) for v in lp.variables]
    if any(cost):
        c_int = _integer_row(cost)
        obj = [0] * (ncols + 1)
        for j in range(nvar):
            obj[j] = c_int[j] * tab.den
        for i, b in enumerate(tab.basis):
            cb = obj[b] // tab.den if b < nvar else 0
            if cb:
                row = tab.rows[i]
                for j in range(ncols + 1):
                    obj[j] -= cb * row[j]
        status = tab.run(obj, allowed)
        if status == UNBOUNDED:
            return BasicSolution(UNBOUNDED)

    values = {v: Fraction(0) for v in lp.variables}
    for i, b in enumerate(tab.basis):
        if b < nvar:
            values[lp.variables[b]] = Fraction(tab.rows[i][-1], tab.den)
    objective = sum((lp.objective.get(v, 0) * x for v, x in values.items()), Fraction(0))
    return BasicSolution(OPTIMAL, values, objective)


def is_extreme_point(lp: LinearProgram, values: Mapping[str, Fraction]) -> bool:
    """Feasible and the tight constraints (nonnegativity included) have full rank.

    Deliberately independent of the simplex code: plain Gaussian
    elimination over ``Fraction``.
    """
    nvar = len(lp.variables)
    index = {v: i for i, v in enumerate(lp.variables)}
    tight: list[list[Fraction]] = []
    for con in lp.constraints:
        lhs = sum((c * values.get(v, 0) for v, c in con.coeffs.items()), Fraction(0))
        if (con.sense == LE and lhs > con.rhs) or (con.sense == GE and lhs < con.rhs) \
                or (con.sense == EQ and lhs != con.rhs):
            return False
        if lhs == con.rhs:
            row = [Fraction(0)] * nvar
            for v, c in con.coeffs.items():
                row[index[v]] = Fraction(c)
            tight.append(row)
    for v in lp.variables:
        x = values.get(v, Fraction(0))
        if x < 0:
            return False
        if x == 0:
            row = [Fraction(0)] * nvar
            row[index[v]] = Fraction(1)
            tight.append(row)
    return matrix_rank(tight, nvar) == nvar


def matrix_rank(rows: list[list[Fraction]], ncols: int) -> int:
    m = [list(r) for r in rows]
    rank = 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][col]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / p
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def x_var(block, job_id) -> str:
    return "x[%s,%s]" % (block, job_id)


def y_var(config_index: int) -> str:
    return "y[%d]" % config_index


def build_cms_lp(inst: Instance) -> LinearProgram:
    """Covering LP over blocks-per-job ``x`` and machines-per-configuration ``y``."""
    if inst.is_numerical:
        raise KindMismatch("the configuration LP needs a combinatorial instance")
    lp = LinearProgram()
    for b in inst.blocks:
        for j in inst.jobs:
            lp.add_variable(x_var(b, j.id))
    for s in range(len(inst.configurations)):
        lp.add_variable(y_var(s), cost=1)
    for b in inst.blocks:
        coeffs = {x_var(b, j.id): 1 for j in inst.jobs}
        for s, conf in enumerate(inst.configurations):
            if conf.count(b):
                coeffs[y_var(s)] = -conf.count(b)
        lp.add_constraint(coeffs, LE, 0, name="supply[%s]" % (b,))
    for j in inst.jobs:
        lp.add_constraint({x_var(b, j.id): j.f(b) for b in inst.blocks}, GE, j.demand,
                          name="demand[%s]" % j.id)
    return lp


def block_set(configs: Iterable[Configuration], inst: Instance) -> list:
    """Block types used by any of ``configs``, in instance declaration order."""
    used = set()
    for c in configs:
        used.update(b for b, _ in c.counts)
    return [b for b in inst.blocks if b in used]


def build_feasibility_lp(inst: Instance, cstar: Sequence[Configuration],
                         m: Mapping[Configuration, int]) -> LinearProgram:
    """Zero-objective LP: serve every job from the blocks of ``m[σ]`` machines per ``σ``."""
    bstar = block_set(cstar, inst)
    lp = LinearProgram()
    for b in bstar:
        for j in inst.jobs:
            lp.add_variable(x_var(b, j.id))
    for b in bstar:
        supply = sum(m.get(c, 0) * c.count(b) for c in cstar)
        lp.add_constraint({x_var(b, j.id): 1 for j in inst.jobs}, LE, supply,
                          name="supply[%s]" % (b,))
    for j in inst.jobs:
        lp.add_constraint({x_var(b, j.id): j.f(b) for b in bstar}, GE, j.demand,
                          name="demand[%s]" % j.id)
    return lp


def to_lp_text(lp: LinearProgram) -> str:
    """Human-readable dump (minimize / subject to / bounds); not an interchange format."""

    def term(c: Fraction, v: str, first: bool) -> str:
        sign = "-" if c < 0 else ("" if first else "+")
        mag = abs(c)
        coef = "" if mag == 1 else "%s " % mag
        return ("%s %s%s" % (sign, coef, v)).strip() if first else "%s %s%s" % (sign, coef, v)

    def expr(coeffs: Mapping[str, Fraction]) -> str:
        items = [(v, c) for v, c in coeffs.items() if c != 0]
        if not items:
            return "0"
        return " ".join(term(c, v, i == 0) for i, (v, c) in enumerate(items))

    lines = ["minimize", "  obj: " + expr(lp.objective), "subject to"]
    for i, con in enumerate(lp.constraints):
        lines.append("  %s: %s %s %s" % (con.name or "c%d" % i, expr(con.coeffs), con.sense, con.rhs))
    lines.append("bounds")
    lines.extend("  %s >= 0" % v for v in lp.variables)
    lines.append("end")
    return "\n".join(lines) + "\n"
