import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from correlator import cli, dsl

from .conftest import CHAIN

FAN_IN = """
model broken
unit L {
  state self modes(failed) prior 0.01 necessity 0.9
  in i
  out o
  link in=i out=o cause=self alpha(p=0.9,n=0.9) delay=[1,2]
}
instance a : L
instance b : L
instance c : L
connect a.o -> c.i
connect b.o -> c.i
"""


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "chain.fm").write_text(CHAIN)
    (tmp_path / "obs.jsonl").write_text('# one symptom\n{"port": "p2.o", "time": 10, "value": "abnormal"}\n')
    return tmp_path


def invoke(workspace, *argv: str) -> tuple[int, str]:
    out = io.StringIO()
    code = cli.run(["-c", str(workspace / "missing.yaml"), *argv], out)
    return code, out.getvalue()


def test_validate_ok(workspace):
    code, output = invoke(workspace, "validate", "--model", str(workspace / "chain.fm"))
    assert code == cli.EXIT_OK
    assert json.loads(output) == {"ok": True, "errors": [], "warnings": []}


def test_validate_reports_errors(workspace):
    (workspace / "broken.fm").write_text(FAN_IN)
    code, output = invoke(workspace, "validate", "--model", str(workspace / "broken.fm"))
    document = json.loads(output)
    assert code == cli.EXIT_ERROR
    assert document["ok"] is False
    [error] = document["errors"]
    assert "fan-in" in error["message"]


def test_validate_reports_syntax_errors(workspace):
    (workspace / "bad.fm").write_text("model m\nunit {\n")
    code, output = invoke(workspace, "validate", "--model", str(workspace / "bad.fm"))
    assert code == cli.EXIT_ERROR
    assert json.loads(output)["errors"][0]["line"] == 2


def test_compile_summary(workspace):
    code, output = invoke(workspace, "compile", "--model", str(workspace / "chain.fm"))
    summary = json.loads(output)
    assert code == cli.EXIT_OK
    assert summary["model"] == "chain"
    assert summary["observables"] == ["p1.o", "p2.o"]
    assert "p2.o#1" in summary["rules"]["p2.o"]


def test_compile_dump_round_trip(workspace):
    code, output = invoke(workspace, "compile", "--model", str(workspace / "chain.fm"), "--dump")
    assert code == cli.EXIT_OK
    assert dsl.parse(output) == dsl.parse(CHAIN)


def test_explain_json(workspace):
    code, output = invoke(workspace, "explain", "--model", str(workspace / "chain.fm"),
                          "--obs", str(workspace / "obs.jsonl"), "--calculus", "probabilistic")
    ranked = json.loads(output)
    assert code == cli.EXIT_OK
    assert len(ranked) == 3
    first = ranked[0]
    assert first["causes"] == [{"var": "src.self", "mode": "failed",
                                "interval": {"lo": 5, "hi": 7, "lo_open": False, "hi_open": False}}]
    assert first["events"] == ["p1.o.alpha", "p2.o.alpha"]
    assert first["belief"] == pytest.approx(0.0072)
    assert [e["cost"] for e in ranked] == sorted(e["cost"] for e in ranked)


def test_explain_max_and_table(workspace):
    code, output = invoke(workspace, "explain", "--model", str(workspace / "chain.fm"),
                          "--obs", str(workspace / "obs.jsonl"), "--calculus", "probabilistic",
                          "--max", "1", "--format", "table")
    lines = output.strip().splitlines()
    assert code == cli.EXIT_OK
    assert lines[0].split()[:4] == ["#", "cost", "belief", "causes"]
    assert len(lines) == 2
    assert "src.self=failed in [5,7]" in lines[1]


def test_explain_with_link_faults(workspace):
    argv = ["explain", "--model", str(workspace / "chain.fm"), "--obs", str(workspace / "obs.jsonl"),
            "--calculus", "probabilistic", "--max", "100"]
    _, plain = invoke(workspace, *argv)
    _, expanded = invoke(workspace, *argv, "--expand")
    assert len(json.loads(expanded)) > len(json.loads(plain))


def test_explain_bad_observation_log(workspace):
    (workspace / "bad.jsonl").write_text('{"port": "p2.o"}\n')
    code, output = invoke(workspace, "explain", "--model", str(workspace / "chain.fm"),
                          "--obs", str(workspace / "bad.jsonl"))
    assert code == cli.EXIT_ERROR
    assert "line 1" in json.loads(output)["errors"][0]["message"]


def test_simulate_is_reproducible(workspace, satellite_path):
    argv = ["simulate", "--model", str(satellite_path), "--inject", "ovt.self=failed@0",
            "--seed", "5", "--horizon", "300", "--normals"]
    code, first = invoke(workspace, *argv)
    _, second = invoke(workspace, *argv)
    assert code == cli.EXIT_OK
    assert first == second
    records = [json.loads(line) for line in first.splitlines()]
    assert {r["port"] for r in records} == {"bus.shed", "ku.temp", "reg.vout"}


EXACT_CHAIN = """
model exact
unit Source {
  state self modes(failed) prior 0.01 necessity 0.9
  out o
  link out=o cause=self
}
unit Pipe {
  state self modes(failed) prior 0.001 necessity 0.95
  in i
  out o
  link in=i out=o cause=self alpha(p=1.0,n=1.0) delay=[3,3]
}
instance src : Source
instance p : Pipe
connect src.o -> p.i
observe p.o
"""


def test_simulate_exact_log(workspace):
    (workspace / "exact.fm").write_text(EXACT_CHAIN)
    code, output = invoke(workspace, "simulate", "--model", str(workspace / "exact.fm"),
                          "--inject", "src.self=failed@4", "--seed", "7", "--horizon", "200", "--normals")
    assert code == cli.EXIT_OK
    assert output == '{"port": "p.o", "time": 7, "value": "abnormal"}\n'


def test_simulate_output_ignores_hash_seed(workspace, satellite_path):
    root = Path(__file__).resolve().parents[1]
    argv = [sys.executable, str(root / "correlator.py"), "-c", str(workspace / "missing.yaml"), "simulate",
            "--model", str(satellite_path), "--inject", "ovt.self=failed@0", "--seed", "7", "--horizon", "200"]
    outputs = []
    for hash_seed in ("0", "1", "4242"):
        env = {**os.environ, "PYTHONHASHSEED": hash_seed}
        done = subprocess.run(argv, cwd=root, env=env, capture_output=True, text=True, check=True)
        outputs.append(done.stdout)
    assert outputs[0] == outputs[1] == outputs[2]
    _, in_process = invoke(workspace, "simulate", "--model", str(satellite_path),
                           "--inject", "ovt.self=failed@0", "--seed", "7", "--horizon", "200")
    assert outputs[0] == in_process


def test_simulate_unknown_cause(workspace, satellite_path):
    code, output = invoke(workspace, "simulate", "--model", str(satellite_path), "--inject", "ovt.self=melted@0")
    assert code == cli.EXIT_ERROR
    assert "Unknown cause" in json.loads(output)["errors"][0]["message"]


def test_oracle_agrees_with_explain(workspace):
    common = ["--model", str(workspace / "chain.fm"), "--obs", str(workspace / "obs.jsonl"),
              "--calculus", "probabilistic"]
    _, explained = invoke(workspace, "explain", *common)
    code, found = invoke(workspace, "oracle", *common)
    assert code == cli.EXIT_OK
    from_explain = {tuple(sorted([f"{c['var']}={c['mode']}" for c in e["causes"]] + e["events"]))
                    for e in json.loads(explained)}
    from_oracle = {tuple(s["assumptions"]) for s in json.loads(found)}
    assert from_explain == from_oracle


def test_usage_errors(workspace):
    assert invoke(workspace, "explain", "--model", "x.fm")[0] == cli.EXIT_USAGE
    assert invoke(workspace, "frobnicate")[0] == cli.EXIT_USAGE
    assert invoke(workspace, "explain", "--model", "x.fm", "--obs", "o", "--calculus", "fuzzy")[0] == cli.EXIT_USAGE


@pytest.mark.parametrize("flag, value", [("--bound", "-1"), ("--bound", "cheap"), ("--max", "0"), ("--max", "-3")])
def test_out_of_range_flags_are_usage_errors(workspace, flag, value):
    code, _ = invoke(workspace, "explain", "--model", str(workspace / "chain.fm"),
                     "--obs", str(workspace / "obs.jsonl"), flag, value)
    assert code == cli.EXIT_USAGE


def test_configuration_supplies_defaults(workspace):
    (workspace / "correlator.yaml").write_text("engine:\n  calculus: probabilistic\n  max_explanations: 1\n")
    out = io.StringIO()
    code = cli.run(["-c", str(workspace / "correlator.yaml"), "explain", "--model", str(workspace / "chain.fm"),
                    "--obs", str(workspace / "obs.jsonl")], out)
    [only] = json.loads(out.getvalue())
    assert code == cli.EXIT_OK
    assert only["belief"] == pytest.approx(0.0072)


def test_time_unit_from_the_environment(workspace, monkeypatch):
    (workspace / "plain.fm").write_text(CHAIN.replace("model chain timeunit ticks", "model chain"))
    monkeypatch.setenv("CORRELATOR_TIME_UNIT", "seconds")
    code, output = invoke(workspace, "compile", "--model", str(workspace / "plain.fm"))
    assert code == cli.EXIT_OK
    assert json.loads(output)["time_unit"] == "seconds"


def test_missing_model_file(workspace):
    code, output = invoke(workspace, "compile", "--model", str(workspace / "nowhere.fm"))
    assert code == cli.EXIT_ERROR
    assert json.loads(output)["errors"][0]["kind"] == "FileNotFoundError"
