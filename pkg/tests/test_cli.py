from __future__ import annotations

import csv
import io
import json
import shutil

import pytest

from conftest import CORPUS
from traceabs.cli import Status, SampleResult, main, summarize


def _copy(tmp_path, *names):
    for n in names:
        shutil.copy(CORPUS / n, tmp_path / n)


def test_verify_safe(tmp_path, capsys):
    _copy(tmp_path, "p1.imp")
    stats = tmp_path / "s.json"
    code = main(["verify", str(tmp_path / "p1.imp"), "--domain", "interval", "--stats", str(stats)])
    assert code == 0
    assert capsys.readouterr().out.startswith("SAFE ")
    data = json.loads(stats.read_text())
    assert (data["total_refinements"], data["ai_refinements"], data["useful_ai_refinements"]) == (2, 1, 1)
    assert data["verdict"] == "SAFE"


def test_verify_unsafe_writes_cex(tmp_path, capsys):
    _copy(tmp_path, "count_off_by_one.imp")
    code = main(["verify", str(tmp_path / "count_off_by_one.imp")])
    assert code == 1
    assert capsys.readouterr().out.startswith("UNSAFE ")
    cex = (tmp_path / "count_off_by_one.imp.cex").read_text()
    assert cex.startswith("state: ") and cex.count("state: ") >= 2


def test_verify_custom_cex_and_dot(tmp_path):
    _copy(tmp_path, "assert_false.imp", "p1.imp")
    assert main(["verify", str(tmp_path / "assert_false.imp"), "--cex", str(tmp_path / "x.txt")]) == 1
    assert (tmp_path / "x.txt").exists()
    assert main(["verify", str(tmp_path / "p1.imp"), "--dot", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "p1.program.dot").read_text().startswith("digraph")
    assert (tmp_path / "d" / "p1.data.dot").exists()


def test_verify_unknown(tmp_path, capsys):
    _copy(tmp_path, "p1.imp")
    assert main(["verify", str(tmp_path / "p1.imp"), "--no-ai", "--max-iter", "3"]) == 2
    assert "iteration-limit" in capsys.readouterr().err


def test_verify_log(tmp_path):
    _copy(tmp_path, "p1.imp")
    log = tmp_path / "l.jsonl"
    main(["verify", str(tmp_path / "p1.imp"), "--domain", "interval", "--log", str(log)])
    assert len(log.read_text().splitlines()) == 3


def test_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.imp"
    bad.write_text("var x;\nx := ;\n")
    assert main(["verify", str(bad)]) == 3
    assert "error" in capsys.readouterr().err
    assert main(["verify", str(tmp_path / "missing.imp")]) == 3


def test_bad_arguments(tmp_path):
    _copy(tmp_path, "p1.imp")
    assert main(["bench", str(tmp_path), "--settings", "polyhedra"]) == 3
    assert main(["bench", str(tmp_path / "nope")]) == 3
    assert main(["verify", str(tmp_path / "p1.imp"), "--max-iter", "0"]) == 3
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_bench_relational(tmp_path, capsys):
    _copy(tmp_path, "count_up.imp", "relational_xy.imp", "abs_value.imp")
    out_csv = tmp_path / "r.csv"
    code = main([
        "bench", str(tmp_path), "--settings", "interval,octagon", "--max-iter", "30",
        "--csv", str(out_csv), "--series", str(tmp_path / "s.csv"), "--no-times",
    ])
    assert code == 0
    table = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert len(rows) == 6
    ok = {(r["file"], r["setting"]): r["verdict"] == r["expected"] for r in rows}
    assert not ok[("relational_xy.imp", "interval")]
    assert all(v for k, v in ok.items() if k != ("relational_xy.imp", "interval"))
    lines = {l.split()[0]: l.split() for l in table.splitlines() if l and not l.startswith("-")}
    assert lines["interval"][1] == "2"
    assert lines["octagon"][1:3] == ["3", "(1)"]
    assert lines["Portfolio"][1] == "3"
    series = (tmp_path / "s.csv").read_text().splitlines()
    assert series[0] == "setting,quantity,rank,value"
    assert not any(",wall_ms," in s for s in series)


def test_bench_wrong_verdict(tmp_path, capsys):
    (tmp_path / "liar.imp").write_text("// @expect unsafe\nvar x;\nx := 1;\nassert(x == 1);\n")
    assert main(["bench", str(tmp_path), "--settings", "interval"]) == 1
    assert "WRONG liar.imp" in capsys.readouterr().err


def test_bench_missing_expect(tmp_path, capsys):
    (tmp_path / "bare.imp").write_text("var x;\nx := 1;\nassert(x == 1);\n")
    assert main(["bench", str(tmp_path), "--settings", "interval"]) == 0
    out, err = capsys.readouterr()
    assert "@expect" in err
    interval = next(l for l in out.splitlines() if l.startswith("interval"))
    assert interval.split()[1:] == ["0", "0", "1", "0"]


def test_bench_parallel_matches_serial(tmp_path):
    _copy(tmp_path, "count_up.imp", "abs_value.imp", "assert_false.imp")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", str(tmp_path), "--settings", "plain,comp", "--no-times"]
    main(args + ["--csv", str(a)])
    main(args + ["--csv", str(b), "--jobs", "2"])
    assert a.read_text() == b.read_text()


def _sample(file, setting, status):
    return SampleResult(file, setting, "", "safe", 0.0, 0, 0, 0, status)


def test_portfolio_precedence():
    rs = [
        _sample("a", "x", Status.ERROR), _sample("a", "y", Status.SUCCESS),
        _sample("b", "x", Status.UNKNOWN), _sample("b", "y", Status.TIMEOUT),
        _sample("c", "x", Status.ERROR), _sample("c", "y", Status.UNKNOWN),
    ]
    s = summarize(rs, ["x", "y"])
    assert s.portfolio == {Status.SUCCESS: 1, Status.TIMEOUT: 1, Status.UNKNOWN: 1, Status.ERROR: 0}
    assert s.exclusive == {"x": 0, "y": 1}
