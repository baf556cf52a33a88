import os
import signal
import socket
import time
import warnings

import pytest

from futurekit.backends.cluster import ClusterWarning, connect_cluster
from futurekit.backends.pool import start_pool
from futurekit.backends.sequential import SequentialBackend
from futurekit.core import Session
from futurekit.errors import EvalError, FutureError
from futurekit.exprlang import parse
from futurekit.relay import RecordingSinks
from futurekit.task import TaskSpec

pytestmark = pytest.mark.slow


def task(body, id_="t", **env):
    return TaskSpec(id_, parse(body), env)


def test_sequential_contract():
    b = SequentialBackend()
    t = b.launch(task('(begin (progress "p") 3)'))
    res = b.poll(t)
    assert res.done and [r.payload for r in res.immediate] == ["p"]
    assert b.poll(t).immediate == []
    assert b.collect(t).value == 3
    assert b.capacity() == 1


def test_pool_contract_and_discard():
    with start_pool(2) as pool:
        assert pool.capacity() == 2 and len(set(pool.pids())) == 2
        a = pool.launch(task("(begin (sleep_ms 100) 1)", "a"))
        b = pool.launch(task("2", "b"))
        assert pool.collect(b).value == 2
        pool.discard(a)
        c = pool.launch(task("3", "c"))
        assert pool.collect(c).value == 3
        with pytest.raises(FutureError):
            pool.collect(a)


def test_pool_resolved_does_not_wait():
    with Session("process_pool:2", sinks=RecordingSinks()) as s:
        f = s.future("(begin (sleep_ms 300) 1)")
        t0 = time.monotonic()
        assert s.resolved(f) is False
        assert time.monotonic() - t0 < 0.2
        assert s.value(f) == 1


def test_killed_worker_is_future_error_and_pool_survives(tmp_path):
    flag = tmp_path / "started"
    with Session("process_pool:2", sinks=RecordingSinks()) as s:
        f = s.future("(begin (touch p) (sleep_ms 20000) 1)", {"p": str(flag)})
        while not flag.exists():
            time.sleep(0.01)
        os.kill(s.backend.workers[f.ticket.worker].pid, signal.SIGKILL)
        with pytest.raises(FutureError) as info:
            s.value(f)
        assert info.value.retryable and not isinstance(info.value, EvalError)
        assert s.capacity() == 1
        assert s.value(s.future("(+ 1 1)")) == 2


def test_workers_do_not_inherit_fw_workers(monkeypatch):
    monkeypatch.setenv("FW_WORKERS", "7")
    with Session("process_pool:1", sinks=RecordingSinks()) as s:
        assert s.value(s.future("(available_workers)")) == 1


def test_nested_layers_follow_the_plan():
    with Session("process_pool:2/process_pool:2", sinks=RecordingSinks()) as s:
        out = s.value(s.future("(future_map (seq 1 2) (lambda (i) (pid)))"))
        assert len(set(out)) == 2 and os.getpid() not in out


def test_cluster_round_trip(cluster_plan):
    with Session(cluster_plan, sinks=RecordingSinks()) as s:
        assert s.capacity() == 2
        f = s.future('(begin (print "remote") (+ x 1))', {"x": 1})
        assert s.value(f) == 2
        assert s.sinks.events == [("stdout", "remote\n")]
    # daemons persist: a second controller can connect
    with Session(cluster_plan, sinks=RecordingSinks()) as s:
        assert s.value(s.future("(+ 2 2)")) == 4


def _dead_port():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return f"127.0.0.1:{port}"


def test_cluster_skips_unreachable(cluster_endpoints):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        backend = connect_cluster([cluster_endpoints[0], _dead_port()], timeout=2)
    try:
        assert backend.capacity() == 1
        assert any(issubclass(w.category, ClusterWarning) for w in caught)
    finally:
        backend.shutdown()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(FutureError):
            connect_cluster([_dead_port()], timeout=2)
