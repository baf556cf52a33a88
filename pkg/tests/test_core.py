import os

import pytest

import futurekit as fk
from futurekit.core import CREATED, FAILED, LAUNCHED, RESOLVED, Session
from futurekit.errors import EvalError, FutureError, MissingGlobalError, NonExportableError, RngMisuseError
from futurekit.exprlang import Env, Resource
from futurekit.relay import RecordingSinks


@pytest.fixture
def seq():
    with Session("sequential", seed=1, sinks=RecordingSinks()) as s:
        yield s


def test_value_and_states(seq):
    f = seq.future("(+ x 1)", {"x": 41})
    assert f.state != CREATED
    assert seq.resolved(f)
    assert f.state == RESOLVED
    assert seq.value(f) == 42 and seq.value(f) == 42


def test_eval_failure_state_and_error(seq):
    f = seq.future('(error "nope")')
    with pytest.raises(EvalError, match="nope"):
        seq.value(f)
    assert f.state == FAILED
    assert seq.resolved(f)
    out = seq.try_value(f)
    assert out.kind == "eval_failure" and out.message == "nope"


def test_relay_repeats_on_every_value(seq):
    f = seq.future('(begin (print "hi") (message "m") 1)')
    seq.value(f)
    seq.value(f)
    assert seq.sinks.events == [("stdout", "hi\n"), ("message", "m")] * 2


def test_lazy_future_waits_for_first_touch(seq, tmp_path):
    p = tmp_path / "ran"
    f = seq.future("(begin (touch p) 1)", {"p": str(p)}, lazy=True)
    assert f.state == CREATED and not p.exists()
    assert seq.resolved(f) is False
    assert f.state == LAUNCHED and p.exists()
    assert seq.value(f) == 1


def test_globals_captured_by_value(seq):
    env = Env({"x": 1})
    f = seq.future("(+ x 0)", env, lazy=True)
    env.assign("x", 2)
    assert seq.value(f) == 1


def test_missing_global_fails_at_creation(seq):
    with pytest.raises(MissingGlobalError, match="object 'y' not found"):
        seq.future("(+ y 1)")
    assert issubclass(MissingGlobalError, EvalError)


def test_globals_override(seq):
    with pytest.raises(EvalError, match="object 'k' not found"):
        seq.value(seq.future('(lookup "k")', {"k": 1}))
    assert seq.value(seq.future('(lookup "k")', {"k": 1}, globals=["k"])) == 1


def test_non_exportable_rejected_unless_scan_disabled():
    r = Resource("db")
    with Session(sinks=RecordingSinks()) as s:
        with pytest.raises(NonExportableError):
            s.future("(resource_info r)", {"r": r})
    with Session(sinks=RecordingSinks(), scan_nonexportable=False) as s:
        # same process, so the handle still works
        assert s.value(s.future("(resource_info r)", {"r": r})) == "db"


def test_rng_misuse_modes():
    for mode, expect in (("warning", 1), ("ignore", 0)):
        with Session(sinks=RecordingSinks(), rng_misuse=mode) as s:
            assert s.value(s.future("(length (runif 1))")) == 1
            assert sum(k == "warning" for k, _ in s.sinks.events) == expect
    with Session(sinks=RecordingSinks(), rng_misuse="error") as s:
        with pytest.raises(RngMisuseError):
            s.value(s.future("(runif 1)"))
        assert s.value(s.future("(runif 1)", seed=True)) is not None
    with pytest.raises(ValueError):
        Session(rng_misuse="sometimes")


def test_seeded_futures_reproducible_across_sessions():
    def draws(seed):
        with Session(seed=seed, sinks=RecordingSinks()) as s:
            return [s.value(s.future("(runif 2)", seed=True)) for _ in range(3)]
    assert draws(5) == draws(5)
    assert draws(5) != draws(6)


def test_ordinals_and_reservation(seq):
    a = seq.future("1")
    base = seq.reserve_ordinals(10)
    b = seq.future("2")
    assert (a.ordinal, base, b.ordinal) == (0, 1, 11)


def test_future_from_other_session_rejected(seq):
    with Session(sinks=RecordingSinks()) as other:
        f = other.future("1")
        with pytest.raises(FutureError):
            seq.value(f)


def test_module_level_api_uses_current_session():
    with Session(sinks=RecordingSinks()) as s:
        assert fk.current_session() is s
        assert str(fk.plan()) == "sequential"
        f = fk.future("(* 6 7)")
        assert fk.resolved(f) and fk.value(f) == 42
        assert fk.try_value(f).ok


def test_plan_parsing():
    p = fk.Plan.parse("process_pool:2/process_pool:3")
    assert [str(x) for x in p.layers] == ["process_pool:2", "process_pool:3"]
    assert str(fk.Plan.parse("multisession").head) == "process_pool:auto"
    assert str(fk.BackendSpec.parse("cluster:h:1,h:2")) == "tcp_cluster:h:1,h:2"
    with pytest.raises(ValueError):
        fk.BackendSpec.parse("process_pool:0")
    with pytest.raises(ValueError):
        fk.BackendSpec.parse("warp_drive")


def test_available_workers_precedence(monkeypatch, no_fw_env):
    from futurekit.backends.spi import available_workers, nesting
    assert available_workers(3) == 3
    monkeypatch.setenv("FW_WORKERS", "5")
    assert available_workers() == 5
    with nesting():
        assert available_workers() == 1
    monkeypatch.delenv("FW_WORKERS")
    monkeypatch.setenv("FW_NESTED", "1")
    assert available_workers() == 1
    monkeypatch.delenv("FW_NESTED")
    assert available_workers() == max(1, len(os.sched_getaffinity(0)))
