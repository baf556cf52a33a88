import json
import subprocess
import sys

import pytest

from futurekit.cli import main
from futurekit.exprlang.values import real_to_hex


def cli(*args):
    proc = subprocess.run([sys.executable, "-m", "futurekit", *args], capture_output=True, text=True, timeout=120)
    return proc.returncode, proc.stdout, proc.stderr


def test_run_prints_value(capsys):
    assert main(["run", "--plan", "sequential", "--expr", "(+ x 1)", "--env", "x=41"]) == 0
    assert capsys.readouterr().out == "42\n"


def test_run_missing_lookup_exits_1(capsys):
    assert main(["run", "--expr", '(lookup "k")']) == 1
    assert "object 'k' not found" in capsys.readouterr().err


def test_run_override(capsys):
    assert main(["run", "--expr", '(lookup "k")', "--env", "k=7", "--globals", "k"]) == 0
    assert capsys.readouterr().out == "7\n"


def test_usage_errors_exit_3(capsys):
    assert main(["run", "--expr", "(+ 1"]) == 3
    assert main(["run"]) == 3
    assert main(["run", "--expr", "1", "--plan", "warp_drive"]) == 3
    assert main([]) == 3


def test_rng_dump_matches_oracle(capsys, rng_vectors):
    assert main(["rng", "dump", "--stream", "0", "--n", "5"]) == 0
    got = [real_to_hex(float(line)) for line in capsys.readouterr().out.split()]
    assert got == rng_vectors["default12345"]["uniform_bits"][:5]
    assert main(["rng", "dump", "--stream", "3", "--n", "1"]) == 0
    assert real_to_hex(float(capsys.readouterr().out)) == rng_vectors["default12345"]["stream_first_uniforms"][3]


@pytest.mark.slow
def test_run_identical_across_plans(cluster_plan):
    expr = '(begin (print "Hello") (message "m") (list x (/ 1 3)))'
    outs = {cli("run", "--plan", p, "--expr", expr, "--env", "x=[1 2]")
            for p in ("sequential", "process_pool:2", cluster_plan)}
    assert len(outs) == 1
    code, out, err = outs.pop()
    assert code == 0 and out == "Hello\n(list [1 2] 0.333333333333333)\n" and err == "m\n"


@pytest.mark.slow
def test_eval_error_exit_code_on_pool():
    code, _, err = cli("run", "--plan", "process_pool:2", "--expr", '(lookup "k")')
    assert code == 1 and "object 'k' not found" in err


@pytest.mark.slow
def test_infra_error_exit_code():
    code, _, err = cli("run", "--plan", "tcp_cluster:127.0.0.1:1", "--expr", "1")
    assert code == 2 and "FutureError" in err


@pytest.mark.slow
def test_conformance_cli_report(tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = cli("conformance", "run", "--plan", "sequential", "--filter", "value.*", "--report", str(report))
    assert code == 0 and "PASS" in out
    data = json.loads(report.read_text())
    assert data["ok"] and all(c["id"].startswith("value.") for c in data["checks"])


@pytest.mark.slow
def test_demo_map_seeded_is_plan_independent():
    a = cli("demo", "map", "--plan", "sequential", "--n", "6", "--seed", "3")[1].splitlines()[0]
    b = cli("demo", "map", "--plan", "process_pool:2", "--n", "6", "--seed", "3")[1].splitlines()[0]
    assert a == b
