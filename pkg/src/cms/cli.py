"""``cms`` command line: gen, solve, validate, oracle, lp, bench.

Exit codes: 0 ok, 2 infeasible input or invalid schedule, 3 guard exceeded,
4 bound violated (bench), 5 I/O or parse error, 6 algorithm/instance kind mismatch.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .fixed_configs import DEFAULT_MAX_CONFIGS, solve_fixed_configs
from .greedy import highest_throughput_first, solve_greedy_log
from .lp import build_cms_lp, to_lp_text
from .model import (CMSError, GuardExceeded, InfeasibleError, Instance, KindMismatch,
                    instance_from_dict, instance_to_dict, schedule_from_dict, schedule_to_dict,
                    validate_instance, validate_schedule)
from .numerical import solve_numerical
from .oracle import (GenParams, exact_min_machines, exact_schedule, gen_numerical_random,
                     gen_random, gen_tight_greedy_family)
from .ptas import DEFAULT_PATTERN_CAP, dp_min_machines, dp_schedule, solve_ptas

EXIT_OK, EXIT_INFEASIBLE, EXIT_GUARD, EXIT_BOUND, EXIT_IO, EXIT_KIND = 0, 2, 3, 4, 5, 6

ALGORITHMS = ("greedy-log", "fixed", "ptas", "numerical", "exact", "dp")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, "%s: error: %s\n" % (self.prog, message))


def _read_json(path: str):
    if path == "-":
        return json.load(sys.stdin)
    with open(path) as fh:
        return json.load(fh)


def _write_json(obj, path: Optional[str]) -> None:
    text = json.dumps(obj, indent=1) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def run_algorithm(name: str, inst: Instance, eps, max_configs: int = DEFAULT_MAX_CONFIGS,
                  pattern_cap: int = DEFAULT_PATTERN_CAP):
    if name == "greedy-log":
        return solve_greedy_log(inst)
    if name == "fixed":
        return solve_fixed_configs(inst, eps, max_configs)
    if name == "ptas":
        return solve_ptas(inst, eps, pattern_cap)
    if name == "numerical":
        return solve_numerical(inst, eps)
    if name == "exact":
        return exact_schedule(inst)
    if name == "dp":
        return dp_schedule(inst)
    raise ValueError("unknown algorithm %r" % name)


def _fmt_ratio(r: Fraction) -> str:
    return "%.4f" % float(r)


# -- subcommands ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    p = GenParams(n=args.n, blocks=args.blocks, configs=args.configs,
                  max_config_size=args.max_config_size, max_demand=args.max_demand,
                  max_table=args.max_table, seed=args.seed, capacity=args.capacity)
    if args.kind == "random":
        inst = gen_random(p)
    elif args.kind == "numerical-random":
        inst = gen_numerical_random(p)
    else:
        inst = gen_tight_greedy_family(args.n)
    _write_json(instance_to_dict(inst), args.output)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = instance_from_dict(_read_json(args.input))
    eps = Fraction(args.epsilon)
    sched = run_algorithm(args.alg, inst, eps, args.max_configs, args.pattern_cap)
    feasible = not validate_schedule(inst, sched)
    if args.output:
        _write_json(schedule_to_dict(sched, inst), args.output)
    line = "cost=%d feasible=%s" % (sched.cost, str(feasible).lower())
    if args.opt:
        opt = exact_min_machines(inst)
        line += " opt=%d" % opt
        if opt > 0:
            line += " ratio=%s" % _fmt_ratio(Fraction(sched.cost, opt))
    print(line)
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def cmd_validate(args) -> int:
    inst = instance_from_dict(_read_json(args.input))
    problems = [str(v) for v in validate_instance(inst)]
    if args.schedule:
        sched = schedule_from_dict(_read_json(args.schedule), inst)
        problems += [str(v) for v in validate_schedule(inst, sched)]
    for p in problems:
        print(p)
    print("violations=%d" % len(problems))
    return EXIT_INFEASIBLE if problems else EXIT_OK


def cmd_oracle(args) -> int:
    inst = instance_from_dict(_read_json(args.input))
    opt = dp_min_machines(inst) if args.method == "dp" else exact_min_machines(inst)
    print("opt=%d" % opt)
    return EXIT_OK


def cmd_lp(args) -> int:
    inst = instance_from_dict(_read_json(args.input))
    text = to_lp_text(build_cms_lp(inst))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- bench ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    instance: str
    algorithm: str
    cost: Optional[int]
    opt: Optional[int]
    ratio: Optional[Fraction]
    time_ms: float
    feasible: bool
    status: str          # ok | skipped | violation | infeasible


CSV_FIELDS = ("instance", "algorithm", "cost", "opt", "ratio", "feasible", "status")


def _trial_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, t]).generate_state(1)[0])


def bench_instances(suite: str, trials: int, seed: int) -> list[tuple[str, Instance]]:
    out = []
    if suite == "tight":
        if trials <= 0:
            return out
        return [("tight-n%d" % n, gen_tight_greedy_family(n)) for n in range(3, 7)]
    for t in range(trials):
        s = _trial_seed(seed, t)
        rng = np.random.default_rng(s)
        if suite == "small":
            p = GenParams(n=int(rng.integers(1, 6)), blocks=int(rng.integers(1, 4)),
                          configs=int(rng.integers(1, 4)), max_config_size=3,
                          max_demand=10, max_table=10, seed=s)
            out.append(("small-%03d" % t, gen_random(p)))
        else:
            k = int(rng.integers(1, 6))
            p = GenParams(n=int(rng.integers(1, 6)), capacity=k, max_demand=12,
                          max_table=12, seed=s)
            out.append(("numerical-%03d" % t, gen_numerical_random(p)))
    return out


def _bounds(suite: str, eps: Fraction, inst: Instance) -> dict:
    """Per-algorithm check ``(cost, opt) -> bool`` for the guarantees we can test."""
    nc = len(inst.configurations)
    checks: dict = {
        "exact": lambda c, o: c == o,
        "dp": lambda c, o: c == o,
        "fixed": lambda c, o: c <= 2 * (1 + eps) * o + nc and c <= (3 + 2 * eps) * o,
        "ptas": lambda c, o: c <= (1 + eps) * o,
        "numerical": lambda c, o: c <= 1 + 2 * (1 + eps) * o,
    }
    if suite == "tight":
        n = inst.n
        checks["htf"] = lambda c, o: c == n
        checks["exact"] = lambda c, o: c == o == 2
    return checks


SUITE_ALGS = {
    "small": ("greedy-log", "fixed", "ptas", "dp", "exact"),
    "tight": ("htf", "greedy-log", "fixed", "exact"),
    "numerical": ("numerical", "exact"),
}


def run_bench(suite: str, trials: int, seed: int, eps=Fraction(1, 2),
              solvers: Optional[dict[str, Callable]] = None) -> list[BenchRow]:
    """Run every algorithm of ``suite`` against the exact oracle.

    ``solvers`` overrides individual algorithms (name -> callable(inst)); the
    test suite uses it to inject a broken solver.
    """
    eps = Fraction(eps)
    rows = []
    for name, inst in bench_instances(suite, trials, seed):
        try:
            opt = exact_min_machines(inst)
        except GuardExceeded:
            opt = None
        except InfeasibleError:
            continue
        checks = _bounds(suite, eps, inst)
        for alg in SUITE_ALGS[suite]:
            if solvers and alg in solvers:
                fn = solvers[alg]
            elif alg == "htf":
                fn = highest_throughput_first
            else:
                fn = (lambda a: lambda i: run_algorithm(a, i, eps))(alg)
            t0 = time.perf_counter()
            try:
                sched = fn(inst)
            except GuardExceeded:
                rows.append(BenchRow(name, alg, None, opt, None,
                                     (time.perf_counter() - t0) * 1e3, True, "skipped"))
                continue
            ms = (time.perf_counter() - t0) * 1e3
            feasible = not validate_schedule(inst, sched)
            ratio = Fraction(sched.cost, opt) if opt else None
            status = "ok"
            if not feasible:
                status = "infeasible"
            elif opt is not None and alg in checks and not checks[alg](sched.cost, opt):
                status = "violation"
            rows.append(BenchRow(name, alg, sched.cost, opt, ratio, ms, feasible, status))
    rows.sort(key=lambda r: (r.instance, r.algorithm))
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, Fraction):
        return _fmt_ratio(v)
    if isinstance(v, bool):
        return str(v).lower()
    return str(v)


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_cell(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def rows_to_table(rows: list[BenchRow]) -> str:
    head = CSV_FIELDS[:5] + ("time_ms",) + CSV_FIELDS[5:]
    body = [[_cell(getattr(r, f)) if f != "time_ms" else "%.2f" % r.time_ms for f in head]
            for r in rows]
    widths = [max([len(h)] + [len(b[i]) for b in body]) for i, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(b, widths)) for b in body]
    return "\n".join(lines) + "\n"


def bench_exit_code(rows: list[BenchRow]) -> int:
    if any(r.status == "infeasible" for r in rows):
        return EXIT_INFEASIBLE
    if any(r.status == "violation" for r in rows):
        return EXIT_BOUND
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = run_bench(args.suite, args.trials, args.seed, Fraction(args.epsilon))
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(rows_to_csv(rows))
    if not args.quiet:
        sys.stdout.write(rows_to_table(rows))
    skipped = sum(r.status == "skipped" for r in rows)
    bad = sum(r.status in ("violation", "infeasible") for r in rows)
    print("rows=%d skipped=%d failures=%d" % (len(rows), skipped, bad))
    return bench_exit_code(rows)


# -- entry point ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cms", description="Configurable machine scheduling solvers.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--kind", choices=("random", "tight-greedy", "numerical-random"), default="random")
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--blocks", type=int, default=3)
    g.add_argument("--configs", type=int, default=3)
    g.add_argument("--max-config-size", type=int, default=3)
    g.add_argument("--max-demand", type=int, default=10)
    g.add_argument("--max-table", type=int, default=10)
    g.add_argument("--capacity", type=int, default=4)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("--alg", choices=ALGORITHMS, required=True)
    s.add_argument("--epsilon", default="0.5")
    s.add_argument("--max-configs", type=int, default=DEFAULT_MAX_CONFIGS)
    s.add_argument("--pattern-cap", type=int, default=DEFAULT_PATTERN_CAP)
    s.add_argument("--opt", action="store_true", help="also run the exact oracle")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check an instance and optionally a schedule")
    v.add_argument("-i", "--input", required=True)
    v.add_argument("-s", "--schedule")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="optimal machine count")
    o.add_argument("--method", choices=("exact", "dp"), default="exact")
    o.add_argument("-i", "--input", required=True)
    o.set_defaults(func=cmd_oracle)

    lp = sub.add_parser("lp", help="print the LP relaxation")
    lp.add_argument("-i", "--input", required=True)
    lp.add_argument("-o", "--output")
    lp.set_defaults(func=cmd_lp)

    b = sub.add_parser("bench", help="approximation ratios against the oracle")
    b.add_argument("--suite", choices=tuple(SUITE_ALGS), default="small")
    b.add_argument("--trials", type=int, default=20)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--epsilon", default="0.5")
    b.add_argument("-o", "--output", help="CSV path")
    b.add_argument("-q", "--quiet", action="store_true")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if hasattr(args, "epsilon"):
            try:
                if Fraction(args.epsilon) <= 0:
                    raise ValueError
            except (ValueError, ZeroDivisionError):
                ap.error("--epsilon must be a positive number")
        return args.func(args)
    except KindMismatch as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_KIND
    except InfeasibleError as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_INFEASIBLE
    except GuardExceeded as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_GUARD
    except (OSError, ValueError, KeyError, TypeError) as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_IO
    except CMSError as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
