import json
import shutil
import subprocess
import sys

import pytest

from orderpp import __version__
from orderpp.cli import run
from orderpp.protocol import read_protocol, render_config, replay_report_trace


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    code, text = run(["corpus", "--out", str(out), "--json"])
    assert code == 0
    assert len(json.loads(text)["written"]) >= 14
    return out


def report(argv):
    code, text = run(list(argv) + ["--json"])
    return code, json.loads(text)


def test_explore_median(corpus_dir, tmp_path):
    dot = tmp_path / "out.dot"
    code, rep = report(["explore", "--protocol", str(corpus_dir / "median.json"),
                        "--word", "a,a,b", "--dot", str(dot)])
    assert code == 0
    # the literal rule table gives 10 configurations (a 7-node reference graph is a subgraph)
    assert rep["nodes"] == 10
    assert rep["accepted"] is True
    assert dot.read_text().startswith("digraph")


def test_check_decider_abstar(corpus_dir):
    code, rep = report(["check-decider", "--protocol", str(corpus_dir / "abstar.json"),
                        "--max-length", "5"])
    assert code == 0 and rep["outcome"] == "PASS"
    assert [v["length"] for v in rep["verdicts"]] == [1, 2, 3, 4, 5]


def test_popa_run_median():
    code, text = run(["popa-run", "--automaton", "builtin:median", "--word", "b,a,b"])
    assert code == 0
    assert "accepting_runs: 1" in text.splitlines()


def test_report_metadata():
    code, rep = report(["popa-run", "--automaton", "builtin:median", "--word", "a"])
    assert rep["tool_version"] == __version__ and rep["verb"] == "popa-run"
    assert rep["inputs"]["word"] == "a" and rep["inputs"]["automaton"] == "builtin:median"


def test_fail_verdict_exits_one_and_replays(corpus_dir):
    path = str(corpus_dir / "markers.json")
    code, rep = report(["check-decider", "--protocol", path, "--max-length", "4"])
    assert code == 1 and rep["outcome"] == "FAIL"
    v = rep["verdicts"][-1]
    p = read_protocol(path)
    end = replay_report_trace(p, v["initial"], v["trace"])
    assert render_config(p, end) in v["bscc"]


def test_language_against_oracle(corpus_dir):
    for name, oracle in [("abstar", "builtin:astarbstar"), ("majority", "builtin:majority"),
                         ("median", "builtin:median")]:
        code, rep = report(["language", "--protocol", str(corpus_dir / f"{name}.json"),
                            "--max-length", "4", "--oracle", oracle])
        assert code == 0 and rep["outcome"] == "PASS", name


def test_corpus_shapes(corpus_dir):
    majority = json.loads((corpus_dir / "majority.json").read_text())
    assert len(majority["rules"]) == 4
    median = json.loads((corpus_dir / "median.json").read_text())
    assert len(median["states"]) == 12


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["explore", "--bogus"],
    ["popa-run", "--automaton", "builtin:nope", "--word", "a"],
    ["explore", "--protocol", "/nonexistent.json", "--word", "a"],
    ["explore", "--word", "a"],
    ["corpus", "nope"],
    ["popa-run", "--automaton", "builtin:median", "--word", "a" * 65],
])
def test_errors_exit_two_with_json(argv, tmp_path, capsys):
    code, text = run(argv + ["--out", str(tmp_path)] if argv[0] == "corpus" else argv)
    assert code == 2
    assert len(text.splitlines()) == 1
    assert "error" in json.loads(text)


def test_reports_are_byte_deterministic(corpus_dir):
    argv = ["simulate", "--protocol", str(corpus_dir / "median.json"), "--word", "a,a,b",
            "--seed", "9", "--max-steps", "50", "--json"]
    assert run(argv) == run(argv)


def test_stable_set_and_pumping(corpus_dir):
    path = str(corpus_dir / "abstar_io.json")
    code, rep = report(["stable-set", "--protocol", path, "--max-length", "4"])
    assert code == 0 and rep["outcome"] == "PASS"
    code, rep = report(["pumping", "--protocol", path, "--samples", "20", "--max-total", "10"])
    assert code == 0 and rep["outcome"] == "PASS" and rep["m"] == 5


def test_compile_sigma2_and_handshake(tmp_path, corpus_dir):
    expr = tmp_path / "aba.json"
    expr.write_text(json.dumps([{"A0": ["a"], "steps": [{"letter": "b", "alphabet": ["a"]}]}]))
    code, rep = report(["compile-sigma2", "--expr", str(expr), "--max-length", "3"])
    assert code == 0 and rep["outcome"] == "PASS" and rep["immediate_observation"]
    out = tmp_path / "hs.json"
    code, rep = report(["transform-handshake", "--protocol", str(corpus_dir / "abstar_succ.json"),
                        "--max-length", "3", "--out", str(out)])
    assert code == 0 and rep["outcome"] == "PASS" and rep["changed"]
    assert read_protocol(str(out)).metadata["handshake"]


def test_gadget_and_validate(corpus_dir):
    code, rep = report(["emptiness-gadget", "--protocol", str(corpus_dir / "empty.json"),
                        "--max-length", "3"])
    assert code == 0 and rep["outcome"] == "PASS"
    code, rep = report(["validate", "--automaton", "builtin:codyck"])
    assert code == 0 and rep["valid"]
    code, rep = report(["popa-unambiguous", "--automaton", str(corpus_dir / "popa_median.json")])
    assert code == 0 and rep["outcome"] == "PASS"


@pytest.mark.skipif(shutil.which("opp") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["opp", "popa-run", "--automaton", "builtin:median", "--word", "a"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "accepted: true" in proc.stdout


def test_module_entry():
    proc = subprocess.run([sys.executable, "-m", "orderpp.cli", "frobnicate"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2 and "usage" in proc.stderr
