from __future__ import annotations

import json
import subprocess
import sys

import pytest

from cms.cli import (EXIT_BOUND, EXIT_INFEASIBLE, EXIT_IO, EXIT_KIND, EXIT_OK, bench_exit_code,
                     main, rows_to_csv, rows_to_table, run_bench)
from cms.model import Configuration, MachineUse, Schedule, instance_to_dict


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_gen_tight(tmp_path, capsys):
    out = tmp_path / "t.json"
    assert main(["gen", "--kind", "tight-greedy", "--n", "3", "-o", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["blocks"] == [1, 2, 3, 4]


def test_gen_deterministic_and_empty(tmp_path):
    a, b, e = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "e.json"
    main(["gen", "--kind", "random", "--seed", "1", "-o", str(a)])
    main(["gen", "--kind", "random", "--seed", "1", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert main(["gen", "--kind", "random", "--n", "0", "-o", str(e)]) == EXIT_OK
    assert main(["validate", "-i", str(e)]) == EXIT_OK


def test_solve_exact_t1(tmp_path, capsys, t1):
    path = _write(tmp_path, "t1.json", instance_to_dict(t1))
    out = tmp_path / "s.json"
    assert main(["solve", "--alg", "exact", "-i", path, "-o", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "cost=1 feasible=true"
    assert main(["validate", "-i", path, "-s", str(out)]) == EXIT_OK


def test_solve_greedy_tight_with_opt(tmp_path, capsys, tight3):
    path = _write(tmp_path, "t3.json", instance_to_dict(tight3))
    assert main(["solve", "--alg", "greedy-log", "-i", path, "--opt"]) == EXIT_OK
    line = capsys.readouterr().out.strip()
    fields = dict(kv.split("=") for kv in line.split())
    assert fields["feasible"] == "true" and fields["opt"] == "2"
    assert float(fields["ratio"]) == int(fields["cost"]) / 2


def test_kind_mismatch_exit(tmp_path):
    main(["gen", "--kind", "numerical-random", "-o", str(tmp_path / "n.json")])
    assert main(["solve", "--alg", "fixed", "-i", str(tmp_path / "n.json")]) == EXIT_KIND


def test_infeasible_and_io_exits(tmp_path):
    zero = {"kind": "combinatorial", "blocks": ["b1"], "configurations": [{"b1": 1}],
            "jobs": [{"id": "j1", "demand": 3, "table": {}}]}
    path = _write(tmp_path, "z.json", zero)
    assert main(["solve", "--alg", "greedy-log", "-i", path]) == EXIT_INFEASIBLE
    assert main(["solve", "--alg", "exact", "-i", str(tmp_path / "missing.json")]) == EXIT_IO
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["oracle", "-i", str(tmp_path / "bad.json")]) == EXIT_IO
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--alg", "nope", "-i", path])
    assert exc.value.code == EXIT_IO


def test_validate_reports_violations(tmp_path, capsys, t1):
    path = _write(tmp_path, "t1.json", instance_to_dict(t1))
    sched = _write(tmp_path, "s.json", {"machines": []})
    assert main(["validate", "-i", path, "-s", sched]) == EXIT_INFEASIBLE
    assert "job j1: unsatisfied (0/5)" in capsys.readouterr().out


def test_oracle_and_lp(tmp_path, capsys, tight3):
    path = _write(tmp_path, "t3.json", instance_to_dict(tight3))
    assert main(["oracle", "--method", "dp", "-i", path]) == EXIT_OK
    assert main(["oracle", "-i", path]) == EXIT_OK
    assert capsys.readouterr().out.split() == ["opt=2", "opt=2"]
    assert main(["lp", "-i", path]) == EXIT_OK
    assert capsys.readouterr().out.startswith("minimize")


def test_bench_tight_rows():
    rows = run_bench("tight", 1, 0)
    assert {r.instance for r in rows} == {"tight-n%d" % n for n in range(3, 7)}
    assert {r.algorithm for r in rows} == {"htf", "greedy-log", "fixed", "exact"}
    assert all(r.status == "ok" and r.feasible for r in rows)
    assert bench_exit_code(rows) == EXIT_OK


def test_bench_empty(capsys):
    assert main(["bench", "--suite", "small", "--trials", "0", "-q"]) == EXIT_OK
    assert run_bench("small", 0, 0) == []


def test_bench_detects_injected_violation():
    def wasteful(inst):
        return Schedule((MachineUse.idle(inst.configurations[0], 10**6),)) + \
            __import__("cms.oracle", fromlist=["exact_schedule"]).exact_schedule(inst)
    rows = run_bench("small", 3, 1, solvers={"ptas": wasteful})
    assert any(r.status == "violation" for r in rows)
    assert bench_exit_code(rows) == EXIT_BOUND


def test_bench_detects_infeasible_output():
    rows = run_bench("small", 3, 1, solvers={"fixed": lambda inst: Schedule()})
    assert any(r.status == "infeasible" for r in rows if r.algorithm == "fixed")
    assert bench_exit_code(rows) != EXIT_OK


def test_csv_and_table_agree():
    rows = run_bench("numerical", 4, 2)
    csv_lines = rows_to_csv(rows).splitlines()
    table_lines = rows_to_table(rows).splitlines()
    assert len(csv_lines) == len(table_lines) == len(rows) + 1
    for c, t in zip(csv_lines[1:], table_lines[1:]):
        assert c.split(",")[:2] == t.split()[:2]


def test_bench_csv_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        subprocess.run([sys.executable, "-m", "cms.cli", "bench", "--suite", "small",
                        "--trials", "5", "--seed", "7", "-q", "-o", str(p)], check=True)
    assert a.read_bytes() == b.read_bytes()
