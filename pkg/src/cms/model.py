"""Instances, schedules, validation and the JSON formats.

A *combinatorial* instance declares block types and a menu of configurations
(multisets of block types).  A *numerical* instance declares a machine
capacity ``k``; block types are the sizes ``1..k`` and any size multiset whose
total is at most ``k`` is an admissible machine.

All types are immutable.  Solvers work on the integer-indexed views exposed as
cached properties (``table``, ``demands``, ``config_vectors``).
"""
from __future__ import annotations

import json
import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Optional, Sequence, Union

COMBINATORIAL = "combinatorial"
NUMERICAL = "numerical"

BlockId = Hashable
JobId = str


class CMSError(Exception):
    """Base class for solver and input errors."""


class InfeasibleError(CMSError):
    """No schedule can satisfy the instance (or a solver got stuck)."""


class GuardExceeded(CMSError):
    """A configured search or enumeration budget would be exceeded."""


class KindMismatch(CMSError):
    """Algorithm applied to the wrong instance kind."""


class ClampWarning(UserWarning):
    """A demand table entry larger than the job's demand was clamped."""


@dataclass(frozen=True, eq=False)
class Configuration:
    """Multiset of block types; ``counts`` keeps declaration order."""

    counts: tuple[tuple[BlockId, int], ...]

    @classmethod
    def of(cls, source: Union[Mapping[BlockId, int], Iterable[BlockId]]) -> "Configuration":
        if isinstance(source, Configuration):
            return source
        merged: dict[BlockId, int] = {}
        if isinstance(source, Mapping):
            for b, c in source.items():
                merged[b] = merged.get(b, 0) + int(c)
        else:
            for b in source:
                merged[b] = merged.get(b, 0) + 1
        return cls(tuple((b, c) for b, c in merged.items() if c != 0))

    def count(self, block: BlockId) -> int:
        return self._as_dict.get(block, 0)

    @cached_property
    def _as_dict(self) -> dict:
        return dict(self.counts)

    def as_dict(self) -> dict:
        return dict(self.counts)

    @property
    def size(self) -> int:
        return sum(c for _, c in self.counts)

    def blocks(self) -> list:
        """Block slots expanded in declaration order."""
        out = []
        for b, c in self.counts:
            out.extend([b] * c)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self._as_dict == other._as_dict

    def __hash__(self) -> int:
        return hash(frozenset(self.counts))

    def __repr__(self) -> str:
        return "Configuration(%r)" % (self.blocks(),)


@dataclass(frozen=True)
class Job:
    id: JobId
    demand: int
    table: tuple[tuple[BlockId, int], ...] = ()

    @classmethod
    def make(cls, id: JobId, demand: int, table: Mapping[BlockId, int]) -> "Job":
        return cls(str(id), int(demand), tuple((b, int(v)) for b, v in table.items()))

    def f(self, block: BlockId) -> int:
        return self._table.get(block, 0)

    @cached_property
    def _table(self) -> dict:
        return dict(self.table)


@dataclass(frozen=True)
class Instance:
    kind: str
    blocks: tuple
    configurations: tuple[Configuration, ...]
    jobs: tuple[Job, ...]
    capacity: Optional[int] = None

    @classmethod
    def combinatorial(cls, blocks: Sequence[BlockId], configurations: Iterable,
                      jobs: Iterable[Job]) -> "Instance":
        return cls(COMBINATORIAL, tuple(blocks),
                   tuple(Configuration.of(c) for c in configurations), tuple(jobs))

    @classmethod
    def numerical(cls, capacity: int, jobs: Iterable[Job]) -> "Instance":
        k = int(capacity)
        return cls(NUMERICAL, tuple(range(1, k + 1)), (), tuple(jobs), k)

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def is_numerical(self) -> bool:
        return self.kind == NUMERICAL

    @cached_property
    def block_index(self) -> dict:
        return {b: i for i, b in enumerate(self.blocks)}

    @cached_property
    def job_index(self) -> dict:
        return {j.id: i for i, j in enumerate(self.jobs)}

    @cached_property
    def table(self) -> list[list[int]]:
        """``table[j][i]`` = units of job ``j`` served by one block of type ``i``."""
        return [[j.f(b) for b in self.blocks] for j in self.jobs]

    @cached_property
    def demands(self) -> list[int]:
        return [j.demand for j in self.jobs]

    @cached_property
    def config_vectors(self) -> list[tuple[int, ...]]:
        return [tuple(c.count(b) for b in self.blocks) for c in self.configurations]

    def admissible(self, config: Configuration) -> bool:
        if self.is_numerical:
            return all(isinstance(b, int) and 1 <= b <= self.capacity for b, _ in config.counts) \
                and sum(b * c for b, c in config.counts) <= self.capacity
        return config in self.configurations

    def normalized(self) -> "Instance":
        """Copy with every table entry clamped to the job's demand."""
        jobs = tuple(Job(j.id, j.demand, tuple((b, min(v, j.demand)) for b, v in j.table))
                     for j in self.jobs)
        return Instance(self.kind, self.blocks, self.configurations, jobs, self.capacity)


@dataclass(frozen=True)
class MachineUse:
    """``multiplicity`` identical machines sharing one configuration and assignment.

    ``assignment`` lists one ``(block, job id or None)`` entry per slot.
    """

    multiplicity: int
    configuration: Configuration
    assignment: tuple[tuple[BlockId, Optional[JobId]], ...]

    @classmethod
    def idle(cls, configuration: Configuration, multiplicity: int = 1) -> "MachineUse":
        return cls(multiplicity, configuration,
                   tuple((b, None) for b in configuration.blocks()))

    def key(self) -> tuple:
        return (self.configuration, tuple(sorted(self.assignment, key=repr)))


@dataclass(frozen=True)
class Schedule:
    machines: tuple[MachineUse, ...] = ()

    @property
    def cost(self) -> int:
        return sum(m.multiplicity for m in self.machines)

    def __add__(self, other: "Schedule") -> "Schedule":
        return Schedule(self.machines + other.machines).merged()

    def scaled(self, factor: int) -> "Schedule":
        return Schedule(tuple(MachineUse(m.multiplicity * factor, m.configuration, m.assignment)
                              for m in self.machines if factor > 0))

    def merged(self) -> "Schedule":
        """Combine identical machine uses, keeping first-appearance order."""
        order: dict = {}
        for m in self.machines:
            if m.multiplicity <= 0:
                continue
            k = m.key()
            if k in order:
                prev = order[k]
                order[k] = MachineUse(prev.multiplicity + m.multiplicity,
                                      prev.configuration, prev.assignment)
            else:
                order[k] = m
        return Schedule(tuple(order.values()))


@dataclass(frozen=True)
class Violation:
    entity: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        return "%s: %s%s" % (self.entity, self.rule, " (%s)" % self.detail if self.detail else "")


def validate_instance(inst: Instance) -> list[Violation]:
    out: list[Violation] = []
    if len(set(inst.blocks)) != len(inst.blocks):
        out.append(Violation("blocks", "duplicate block type"))
    declared = set(inst.blocks)
    if inst.kind not in (COMBINATORIAL, NUMERICAL):
        out.append(Violation("instance", "unknown kind", str(inst.kind)))
    if inst.is_numerical:
        if not isinstance(inst.capacity, int) or inst.capacity < 1:
            out.append(Violation("instance", "capacity must be a positive integer"))
        elif tuple(inst.blocks) != tuple(range(1, inst.capacity + 1)):
            out.append(Violation("blocks", "numerical block types must be 1..k"))
    else:
        for idx, c in enumerate(inst.configurations):
            if c.size < 1 or any(v < 0 for _, v in c.counts):
                out.append(Violation("configuration %d" % idx, "empty or negative configuration"))
            for b, _ in c.counts:
                if b not in declared:
                    out.append(Violation("configuration %d" % idx, "unknown block type", repr(b)))
    seen = set()
    for j in inst.jobs:
        if j.id in seen:
            out.append(Violation("job %s" % j.id, "duplicate job id"))
        seen.add(j.id)
        if j.demand < 0:
            out.append(Violation("job %s" % j.id, "negative demand"))
        for b, v in j.table:
            if b not in declared:
                out.append(Violation("job %s" % j.id, "unknown block type", repr(b)))
            if v < 0:
                out.append(Violation("job %s" % j.id, "negative table entry", repr(b)))
            elif v > j.demand:
                out.append(Violation("job %s" % j.id, "table exceeds demand",
                                     "f(%r)=%d > d=%d" % (b, v, j.demand)))
    return out


def satisfied_demand(inst: Instance, sched: Schedule, job_id: JobId) -> int:
    if job_id not in inst.job_index:
        raise KeyError("unknown job id %r" % (job_id,))
    job = inst.jobs[inst.job_index[job_id]]
    total = 0
    for m in sched.machines:
        for b, j in m.assignment:
            if j == job_id:
                total += job.f(b) * m.multiplicity
    return total


def validate_schedule(inst: Instance, sched: Schedule) -> list[Violation]:
    out: list[Violation] = []
    for idx, m in enumerate(sched.machines):
        name = "machine %d" % idx
        if m.multiplicity < 1:
            out.append(Violation(name, "multiplicity must be positive"))
        if not inst.admissible(m.configuration):
            if inst.is_numerical:
                used = sum(b * c for b, c in m.configuration.counts)
                out.append(Violation(name, "capacity exceeded", "%d > %d" % (used, inst.capacity)))
            else:
                out.append(Violation(name, "configuration not in instance"))
        slots: dict = {}
        for b, j in m.assignment:
            slots[b] = slots.get(b, 0) + 1
            if j is not None and j not in inst.job_index:
                out.append(Violation(name, "unknown job", repr(j)))
        if slots != m.configuration.as_dict():
            out.append(Violation(name, "assignment does not match configuration slots"))
    for j in inst.jobs:
        got = satisfied_demand(inst, sched, j.id)
        if got < j.demand:
            out.append(Violation("job %s" % j.id, "unsatisfied", "%d/%d" % (got, j.demand)))
    return out


def realize(plan: Iterable[tuple[Configuration, int]],
            allocation: Iterable[tuple[BlockId, JobId, int]]) -> Schedule:
    """Turn machine counts plus per-(block, job) block counts into a schedule.

    ``allocation`` is consumed per block type in the order given.  Runs of
    identical machines are emitted as one ``MachineUse`` so the result stays
    small when counts are large.  Raises ``InfeasibleError`` if the plan
    supplies fewer blocks than allocated.
    """
    queues: dict = {}
    for b, j, cnt in allocation:
        if cnt > 0:
            queues.setdefault(b, deque()).append([j, cnt])
    machines: list[MachineUse] = []
    for config, count in plan:
        left = count
        while left > 0:
            run = left
            for b, a in config.counts:
                q = queues.get(b)
                if q:
                    run = min(run, q[0][1] // a)
            if run > 0:
                slots = []
                for b, a in config.counts:
                    q = queues.get(b)
                    if q:
                        head = q[0]
                        slots.extend([(b, head[0])] * a)
                        head[1] -= a * run
                        if head[1] == 0:
                            q.popleft()
                    else:
                        slots.extend([(b, None)] * a)
                machines.append(MachineUse(run, config, tuple(slots)))
                left -= run
            else:
                slots = []
                for b in config.blocks():
                    q = queues.get(b)
                    if q:
                        head = q[0]
                        slots.append((b, head[0]))
                        head[1] -= 1
                        if head[1] == 0:
                            q.popleft()
                    else:
                        slots.append((b, None))
                machines.append(MachineUse(1, config, tuple(slots)))
                left -= 1
    short = {b: sum(e[1] for e in q) for b, q in queues.items() if q}
    if short:
        raise InfeasibleError("machine plan is short of blocks: %r" % (short,))
    return Schedule(tuple(machines)).merged()


# -- JSON ---------------------------------------------------------------------

def _block_key(inst_kind: str, raw) -> BlockId:
    return int(raw) if inst_kind == NUMERICAL else raw


def _declared_key(inst: Instance, raw) -> BlockId:
    if inst.is_numerical:
        return int(raw)
    if raw in inst.block_index:
        return raw
    return {str(b): b for b in inst.blocks}.get(str(raw), raw)


def instance_to_dict(inst: Instance) -> dict:
    jobs = [{"id": j.id, "demand": j.demand,
             "table": {str(b): v for b, v in j.table}} for j in inst.jobs]
    if inst.is_numerical:
        return {"kind": NUMERICAL, "capacity": inst.capacity, "jobs": jobs}
    return {"kind": COMBINATORIAL, "blocks": list(inst.blocks),
            "configurations": [c.as_dict() for c in inst.configurations], "jobs": jobs}


def instance_from_dict(data: Mapping) -> Instance:
    """Parse the JSON form; table entries above the demand are clamped with a warning."""
    kind = data.get("kind", COMBINATORIAL)
    # JSON object keys are strings; map them back onto the declared block ids
    declared = {str(b): b for b in data.get("blocks", [])}

    def key(raw):
        return _block_key(kind, raw) if kind == NUMERICAL else declared.get(str(raw), raw)

    jobs = []
    for raw in data.get("jobs", []):
        d = int(raw["demand"])
        table = {}
        for b, v in raw.get("table", {}).items():
            v = int(v)
            if v > d:
                warnings.warn("job %s: f(%s)=%d clamped to demand %d" % (raw["id"], b, v, d),
                              ClampWarning, stacklevel=2)
                v = d
            table[key(b)] = v
        jobs.append(Job.make(raw["id"], d, table))
    if kind == NUMERICAL:
        return Instance.numerical(int(data["capacity"]), jobs)
    if kind != COMBINATORIAL:
        raise ValueError("unknown instance kind %r" % (kind,))
    configs = [{key(b): c for b, c in conf.items()} if isinstance(conf, Mapping) else
               [key(b) for b in conf] for conf in data.get("configurations", [])]
    return Instance.combinatorial(data["blocks"], configs, jobs)


def schedule_to_dict(sched: Schedule, inst: Instance) -> dict:
    machines = []
    for m in sched.machines:
        if inst.is_numerical:
            conf = sorted(m.configuration.blocks(), reverse=True)
        else:
            try:
                conf = inst.configurations.index(m.configuration)
            except ValueError:
                conf = m.configuration.as_dict()
        machines.append({"multiplicity": m.multiplicity, "configuration": conf,
                         "assignment": [[b, j] for b, j in m.assignment]})
    return {"machines": machines}


def schedule_from_dict(data: Mapping, inst: Instance) -> Schedule:
    machines = []
    for raw in data.get("machines", []):
        conf = raw["configuration"]
        if isinstance(conf, int) and not inst.is_numerical:
            config = inst.configurations[conf]
        elif isinstance(conf, Mapping):
            config = Configuration.of({_declared_key(inst, b): c for b, c in conf.items()})
        else:
            config = Configuration.of([_declared_key(inst, b) for b in conf])
        assignment = tuple((_declared_key(inst, b), j) for b, j in raw["assignment"])
        machines.append(MachineUse(int(raw["multiplicity"]), config, assignment))
    return Schedule(tuple(machines))


def load_instance(path: Union[str, Path]) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def dump_json(obj: Mapping, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=False)
        fh.write("\n")
