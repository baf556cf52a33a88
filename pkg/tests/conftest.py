import os
import subprocess
import sys
from pathlib import Path

import pytest

from futurekit.backends.pool import worker_environment

ROOT = Path(__file__).resolve().parents[1]
DATA = Path(__file__).parent / "data"


def spawn_daemon():
    """Start a persistent TCP worker on a free port; returns (proc, "host:port")."""
    proc = subprocess.Popen(
        [sys.executable, "-m", "futurekit", "worker", "serve", "--listen", "127.0.0.1:0", "--persist"],
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        env=worker_environment(),
        text=True,
    )
    line = proc.stdout.readline().strip()
    if not line.startswith("listening on "):
        proc.kill()
        raise RuntimeError(f"daemon did not start: {line!r}")
    return proc, line.removeprefix("listening on ")


def stop(procs):
    for p in procs:
        p.kill()
        p.wait(timeout=10)
        if p.stdout:
            p.stdout.close()


@pytest.fixture(scope="session")
def cluster_endpoints():
    started = [spawn_daemon() for _ in range(2)]
    yield [ep for _, ep in started]
    stop([p for p, _ in started])


@pytest.fixture(scope="session")
def cluster_plan(cluster_endpoints):
    return "tcp_cluster:" + ",".join(cluster_endpoints)


@pytest.fixture
def no_fw_env(monkeypatch):
    monkeypatch.delenv("FW_WORKERS", raising=False)
    monkeypatch.delenv("FW_NESTED", raising=False)


@pytest.fixture(scope="session")
def rng_vectors():
    import json
    return json.loads((DATA / "mrg32k3a_vectors.json").read_text())


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import lines
    out = lines()
    if out:
        terminalreporter.section("acceptance criteria")
        for line in out:
            terminalreporter.write_line(line)
