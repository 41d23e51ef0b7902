import io
import json
import subprocess
import sys

import pytest

from ettid import cli
from ettid.cli import EXIT, InputError, RunConfig, emit_report, main, parse_domains, run, token_indices
from ettid.estimand import Const, from_json
from ettid.figures import FIGURES, figure_text
from ettid.identify import QueryError
from ettid.query import parse_query

Q1 = "ETT[ Y=y | do(X=x) ; X=x' ]"
Q5 = "ETT[ Y=y | do(X1=x1), do(X2=x2) ; X1=x1', X2=x2' ]"
KEYS = {"query", "verdict", "route", "source", "estimand", "estimand_text", "alternates",
        "witness", "notes", "dropped", "verification"}


@pytest.fixture
def graph(tmp_path):
    def write(name):
        p = tmp_path / f"{name}.graph"
        p.write_text(figure_text(name))
        return str(p)
    return write


def test_parse_query_examples():
    q = parse_query(Q1)
    assert q.treatments == (("X", "x", "x'"),) and q.outcomes == (("Y", "y"),)
    q = parse_query(Q5)
    assert q.x == {"X1", "X2"}
    with pytest.raises(QueryError, match="observed"):
        parse_query("ETT[ Y=y | do(X=x) ]")
    for bad in ("ETT[ Y=y | do(X=x) ; Z=x' ]", "ETT[ Y=y, Y=z | do(X=x) ; X=x' ]", "Y=y | do(X=x)"):
        with pytest.raises(QueryError):
            parse_query(bad)


def test_identify_fig1a(graph):
    status, doc = run(RunConfig(graph("fig1a"), Q1))
    assert status == EXIT["ok"]
    assert set(doc) == KEYS
    assert doc["verdict"] == "identified" and doc["route"] == "thm2" and doc["source"] == "observational"
    assert doc["verification"] is None
    assert {a["route"] for a in doc["alternates"]} == {"thm1"}
    from_json(doc["estimand"])


def test_verify_fig1a_100_seeds(graph):
    status, doc = run(RunConfig(graph("fig1a"), Q1, mode="verify", seeds=100))
    assert status == 0
    v = doc["verification"]
    assert v["seeds"] == 100 and v["max_deviation"] < 1e-9
    assert all(a["max_deviation"] < 1e-9 for a in v["alternates"])


def test_fig4a_thm3_witness(graph):
    status, doc = run(RunConfig(graph("fig4a"), Q1))
    assert status == EXIT["not-identifiable"]
    assert doc["verdict"] == "not-identifiable" and doc["estimand"] is None
    assert doc["witness"]["kind"] == "thm3-component"


def test_bow_witness(graph):
    # not identifiable even from experiments, so the stronger witness is reported
    status, doc = run(RunConfig(graph("bow"), Q1))
    assert status == 1 and doc["witness"]["kind"] == "thm3-component"
    assert any("bidirected path" in n for n in doc["notes"])


def test_multi_routes(graph):
    status, doc = run(RunConfig(graph("fig5a"), Q5, mode="verify", seeds=30))
    assert status == 0 and doc["route"] == "thm6"
    assert doc["verification"]["max_deviation"] < 1e-9
    assert [a["route"] for a in doc["alternates"]] == ["thm5"]
    status, doc = run(RunConfig(graph("fig4b"), Q5))
    assert status == 1 and doc["witness"]["kind"] == "thm3-component"


def test_malformed_graph_line(tmp_path):
    p = tmp_path / "bad.graph"
    p.write_text("X -> Y\nX => Y\n")
    status, doc = run(RunConfig(str(p), Q1))
    assert status == EXIT["input"] and "line 2" in doc["error"]


def test_input_errors(graph, tmp_path):
    assert run(RunConfig(str(tmp_path / "missing.graph"), Q1))[0] == 3
    assert run(RunConfig(graph("fig1a"), "ETT[ Y=y | do(X=x) ]"))[0] == 3
    assert run(RunConfig(graph("fig1a"), "ETT[ Q=y | do(X=x) ; X=x' ]"))[0] == 3
    assert run(RunConfig(graph("fig5a"), "ETT[ Y=y | do(X1=a), do(X2=b) ; X1=a, X2=c ]"))[0] == 3
    assert run(RunConfig(graph("fig1a"), Q1, mode="verify", domains={"Nope": 3}))[0] == 3


def test_config_validation():
    with pytest.raises(InputError):
        RunConfig("g", Q1, tolerance=0)
    with pytest.raises(InputError):
        RunConfig("g", Q1, mode="verify", seeds=0)
    with pytest.raises(InputError):
        RunConfig("g", Q1, mode="explain")
    with pytest.raises(InputError):
        parse_domains("X=1")
    with pytest.raises(InputError):
        parse_domains("X")
    assert parse_domains("X=3, Y=2") == {"X": 3, "Y": 2}


def test_token_indices():
    assert token_indices(parse_query(Q1)) == {("Y", "y"): 0, ("X", "x"): 0, ("X", "x'"): 1}


def test_deviation_exit(graph, monkeypatch):
    real = cli.identify_ett

    def broken(g, q):
        rep = real(g, q)
        rep.estimand = Const(0)
        return rep
    monkeypatch.setattr(cli, "identify_ett", broken)
    status, doc = run(RunConfig(graph("fig1a"), Q1, mode="verify", seeds=5))
    assert status == EXIT["deviation"] and doc["verification"]["max_deviation"] > 1e-9


def test_resource_exit(graph):
    status, doc = run(RunConfig(graph("fig1a"), Q1, mode="verify", cap=4))
    assert status == EXIT["resource"] and "ResourceError" in doc["error"]


def test_counterexample_mode(graph):
    status, doc = run(RunConfig(graph("bow"), Q1, mode="counterexample", budget=20_000))
    assert status == 1 and doc["counterexample"]["found"]
    status, doc = run(RunConfig(graph("fig1a"), Q1, mode="counterexample", budget=1_000))
    assert status == 0 and not doc["counterexample"]["found"]


def test_query_from_file(graph, tmp_path):
    qf = tmp_path / "q.txt"
    qf.write_text(Q1 + "\n")
    assert run(RunConfig(graph("fig1a"), str(qf)))[1]["route"] == "thm2"


def test_text_output_stable(graph):
    _, doc = run(RunConfig(graph("fig1a"), Q1, mode="verify", seeds=3))
    a, b = io.StringIO(), io.StringIO()
    emit_report(doc, "text", a)
    emit_report(doc, "text", b)
    assert a.getvalue() == b.getvalue()
    text = a.getvalue()
    assert "verdict:  identified" in text and "route:    thm2 (observational)" in text
    assert "P(y|z,x')" in text and "verification: seeds=3" in text


def test_json_deterministic(graph, capsys):
    for name in FIGURES:
        outs = []
        for _ in range(2):
            main(["--graph", graph(name), "--query", Q5 if name.startswith(("fig4b", "fig5")) else Q1,
                  "--mode", "verify", "--seeds", "4", "--output", "json"])
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1]
        json.loads(outs[0])


def test_console_entry_point(graph):
    r = subprocess.run([sys.executable, "-m", "ettid.cli", "--graph", graph("fig4a"), "--query", Q1],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "thm3-component" in r.stdout
