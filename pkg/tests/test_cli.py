import json

import pytest

from mcdline import bench
from mcdline.cli import EXIT_ASSERT, EXIT_GUARD, EXIT_INFEASIBLE, EXIT_OK, EXIT_PARSE, main, parse_seeds, parse_sizes
from mcdline.grid import Instance, Replica, arc
from mcdline.offline import save_solution


@pytest.fixture
def inst_file(tmp_path):
    path = tmp_path / "inst.json"
    assert main(["gen", "--family", "clustered", "--n", "64", "--N", "8", "--t-max", "20", "--seed", "1",
                 "-o", str(path)]) == EXIT_OK
    return path


def test_parse_helpers():
    assert parse_sizes("2^3..2^5,100") == [8, 16, 32, 100]
    assert parse_sizes("") == []
    assert parse_seeds("2:5") == [2, 3, 4]
    assert parse_seeds("1,7") == [1, 7]


@pytest.mark.parametrize("alg", ["triangle", "lineon", "lineonp"])
def test_run_then_check(alg, inst_file, tmp_path, capsys):
    sol = tmp_path / f"{alg}.json"
    assert main(["run", alg, str(inst_file), "--solution", str(sol)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["feasible"] and report["algorithm"] == alg
    if alg == "lineon":
        assert "ratio_vs_triangle" in report and report["bound_satisfied"]
    assert main(["check", str(inst_file), str(sol)]) == EXIT_OK


def test_run_exact_and_guard(tmp_path, capsys):
    small = tmp_path / "small.json"
    Instance(8, 1, (Replica(4, 2),)).save(small)
    assert main(["run", "exact", str(small)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["total_cost"] == 5
    big = tmp_path / "big.json"
    Instance(500, 1, tuple(Replica(v, v) for v in range(1, 20))).save(big)
    assert main(["run", "exact", str(big)]) == EXIT_GUARD


def test_check_reports_infeasible(tmp_path):
    path = tmp_path / "i.json"
    Instance(4, 1, (Replica(1, 2),)).save(path)
    sol = tmp_path / "s.json"
    save_solution({arc(1, 0)}, sol)
    assert main(["check", str(path), str(sol)]) == EXIT_INFEASIBLE


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "lineon", str(bad)]) == EXIT_PARSE
    assert main(["run", "lineon", str(tmp_path / "missing.json")]) == EXIT_PARSE
    assert main(["gen", "--n", "1"]) == EXIT_PARSE
    assert main(["bench", "--sizes", "8..16"]) == EXIT_PARSE
    with pytest.raises(SystemExit) as exc:
        main(["run", "nonsense", "x"])
    assert exc.value.code == EXIT_PARSE


def test_onrsa_run_and_check(tmp_path, capsys):
    pts = tmp_path / "p.jsonl"
    assert main(["gen", "--points", "--n", "30", "--N", "9", "--t-max", "15", "-o", str(pts)]) == EXIT_OK
    segs = tmp_path / "segs.json"
    assert main(["run", "onrsa", str(pts), "--solution", str(segs)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["feasible"]
    assert main(["check", "--points", str(pts), str(segs)]) == EXIT_OK
    segs.write_text("[]")
    assert main(["check", "--points", str(pts), str(segs)]) == EXIT_INFEASIBLE


def test_lineon_assertion_failure_exit_code(inst_file, monkeypatch):
    from mcdline import online_mcd

    def broken(self):
        raise online_mcd.InvariantViolation("commit lemma", "forced")

    monkeypatch.setattr(online_mcd.LineOn, "finish", broken)
    assert main(["run", "lineon", str(inst_file)]) == EXIT_ASSERT


def test_bench_is_deterministic(tmp_path, capsys):
    args = ["bench", "--families", "uniform,staircase,cascade", "--sizes", "2^5..2^7", "--seeds", "0:3"]
    assert main([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([*args, "--out", str(tmp_path / "b"), "--jobs", "2"]) == EXIT_OK
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    header = a.decode().splitlines()[0].split(",")
    assert tuple(header) == bench.COLUMNS
    data = json.loads((tmp_path / "a.json").read_text())
    assert data["schema"] == 1 and data["log_base"] == 2
    assert len(data["rows"]) == 27 and data["aggregate"]["all_bounds_hold"]
    capsys.readouterr()
    assert main(["report", str(tmp_path / "a.json")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all bounds hold: True" in out and "fit_sqrt_log" in out
    assert main(["report", str(tmp_path / "a.json"), "--format", "csv"]) == EXIT_OK
    assert capsys.readouterr().out.encode() == a


def test_empty_bench(tmp_path, capsys):
    assert main(["bench", "--sizes", "", "--out", str(tmp_path / "e")]) == EXIT_OK
    data = json.loads((tmp_path / "e.json").read_text())
    assert data["rows"] == [] and data["aggregate"]["rows"] == 0


def test_bench_row_errors_are_recorded():
    row = bench.run_row(bench.GenSpec("uniform", 8, 3, 3), with_exact=False, assert_level="bogus")
    assert row["error"] and row["bound_satisfied"] is False
    report = bench.BenchReport.build([row])
    assert report.aggregate["rows"] == 0


def test_svg_output(inst_file, tmp_path):
    out = tmp_path / "t.svg"
    assert main(["run", "triangle", str(inst_file), "--format", "svg", "--report", str(out)]) == EXIT_OK
    text = out.read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>") and "<line" in text


def test_gen_points_stdout(capsys):
    assert main(["gen", "--points", "--n", "10", "--N", "3", "--t-max", "5"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and all("x" in json.loads(x) for x in lines)
