"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed as each test finishes (visible with ``-s``) and again
in the terminal summary.  Backends under test are sequential, a pool of 2,
a pool of 4 and two local TCP daemons.
"""
import json
import os
import random
import re
import struct
import subprocess
import sys
import threading
import time

import pytest
from hypothesis import given, settings

from acceptance_report import criterion
from futurekit import Session, future_map
from futurekit.conformance import run_conformance
from futurekit.conformance.corpus import RELAY_PROGRAM, RELAY_X
from futurekit.errors import EvalError, FutureError
from futurekit.exprlang import decode_value, encode_value
from futurekit.relay import RecordingSinks
from futurekit.rng import M1, M2, RngCursor, RngState, advance, jump, next_stream, next_uniform
from futurekit.exprlang.values import real_to_hex
from futurekit.task import TaskSpec
from strategies import same_value, task_specs, values

pytestmark = pytest.mark.slow

SEED = 4242


@pytest.fixture(scope="module")
def plans(cluster_plan):
    return {
        "sequential": "sequential",
        "process_pool:2": "process_pool:2",
        "process_pool:4": "process_pool:4",
        "tcp_cluster:2": cluster_plan,
    }


def sessions(plans, **opts):
    """Yield ``(name, session)`` one backend at a time.

    Sessions are opened one after another because a daemon serves a single
    controller at a time.
    """
    for name, p in plans.items():
        with Session(p, sinks=RecordingSinks(), **opts) as s:
            yield name, s


def bits(xs):
    return [struct.pack(">d", x).hex() for x in xs]


# -- 1 ------------------------------------------------------------------------

@criterion(1, "conformance parity on sequential, process_pool x2/x4, tcp_cluster x2 in < 120 s")
def test_conformance_parity(plans):
    t0 = time.monotonic()
    failed = {}
    counts = []
    for name, p in plans.items():
        report = run_conformance(p)
        counts.append(len(report.results))
        if not report.ok:
            failed[name] = [r.id for r in report.failed]
    elapsed = time.monotonic() - t0
    assert min(counts) >= 25
    assert not failed, failed
    assert elapsed < 120, f"took {elapsed:.1f} s"
    return f"{counts[0]} checks per backend"


# -- 2 ------------------------------------------------------------------------

@criterion(2, "relay program gives 55 and the exact relay order on every backend")
def test_relay_order(plans):
    expected = [
        ("stdout", "Hello world\n"),
        ("stdout", "Bye bye\n"),
        ("message", "The sum of 'x' is 55"),
        ("warning", "Missing values were omitted"),
    ]
    for name, s in sessions(plans):
        assert s.value(s.future(RELAY_PROGRAM, {"x": RELAY_X})) == 55, name
        assert s.sinks.events == expected, name


# -- 3 ------------------------------------------------------------------------

CHAOS_TRIALS = 20


@criterion(3, "(log \"24\") is an EvalError everywhere; killed worker is a FutureError in 20/20 trials")
def test_error_taxonomy(plans, tmp_path):
    for name, s in sessions(plans):
        with pytest.raises(EvalError) as info:
            s.value(s.future("(log x)", {"x": "24"}))
        assert info.value.message == "non-numeric argument to mathematical function", name
        assert not isinstance(info.value, FutureError)

    hits = 0
    for trial in range(CHAOS_TRIALS):
        flag = tmp_path / f"started-{trial}"
        with Session("process_pool:2", sinks=RecordingSinks()) as s:
            f = s.future("(begin (touch p) (sleep_ms 30000) 1)", {"p": str(flag)})
            while not flag.exists():
                time.sleep(0.005)
            os.kill(s.backend.workers[f.ticket.worker].pid, 9)
            try:
                s.value(f)
            except FutureError as e:
                hits += not isinstance(e, EvalError)
    assert hits == CHAOS_TRIALS, f"{hits}/{CHAOS_TRIALS}"
    return f"{hits}/{CHAOS_TRIALS} chaos trials"


# -- 4 ------------------------------------------------------------------------

@criterion(4, "dynamic lookup needs a globals override; captures are immutable on every backend")
def test_globals(plans):
    for name, s in sessions(plans):
        with pytest.raises(EvalError) as info:
            s.value(s.future('(lookup "k")', {"k": 42}))
        assert info.value.message == "object 'k' not found", name
        assert s.value(s.future('(lookup "k")', {"k": 42}, globals=["k"])) == 42, name

        env = {"x": 1}
        f = s.future("(+ x 0)", env, lazy=True)
        env["x"] = 2
        assert s.value(f) == 1, name
    for name, p in plans.items():
        report = run_conformance(p, pattern="capture.*")
        assert report.ok and len(report.results) >= 2, (name, report.table())


# -- 5 ------------------------------------------------------------------------

@criterion(5, "seeded future_map is bit-identical across backends and chunkings; RNG matches the oracle")
def test_rng_reproducibility(plans, rng_vectors):
    draw = "(lambda (i) (nth (rnorm 1) 0))"
    outputs = {}
    for name, p in plans.items():
        for chunks in (1, 2, 5, 10):
            with Session(p, seed=SEED, sinks=RecordingSinks()) as s:
                outputs[name, chunks] = bits(future_map(range(100), draw, chunks=chunks, seed=True, session=s))
    reference = outputs["sequential", 1]
    assert len(set(reference)) == 100
    mismatched = [key for key, out in outputs.items() if out != reference]
    assert not mismatched, mismatched

    for vec in rng_vectors.values():
        cursor = RngCursor(RngState.from_words(vec["seed"]))
        assert [real_to_hex(next_uniform(cursor)) for _ in range(1000)] == vec["uniform_bits"]
        state = RngState.from_words(vec["seed"])
        for expected in vec["streams"][1:11]:
            state = next_stream(state)
            assert state.words() == expected
    return f"{len(outputs)} runs identical"


# -- 6 ------------------------------------------------------------------------

@criterion(6, "jump by 2^20 equals 2^20 single steps for 10 random states")
def test_jump_ahead():
    rnd = random.Random(20)
    for _ in range(10):
        words = [rnd.randrange(1, M1) for _ in range(3)] + [rnd.randrange(1, M2) for _ in range(3)]
        state = RngState.from_words(words)
        assert jump(state, 2**20).words() == advance(state, 2**20).words()


# -- 7 ------------------------------------------------------------------------

BLOCKING_TRIALS = 20


@criterion(7, "third future() at capacity 2 returns only after a latch release, 20/20 trials")
def test_blocking(tmp_path):
    ok = 0
    with Session("process_pool:2", sinks=RecordingSinks()) as s:
        assert s.capacity() == 2
        for trial in range(BLOCKING_TRIALS):
            latch = str(tmp_path / f"latch-{trial}")
            events = []
            held = [s.future("(begin (wait_file p 30000) i)", {"p": latch, "i": i}) for i in range(2)]

            def release():
                time.sleep(0.1)
                events.append("release")
                open(latch, "w").close()

            t = threading.Thread(target=release)
            t.start()
            third = s.future("3")
            events.append("third returned")
            t.join()
            values = [s.value(f) for f in [*held, third]]
            ok += events == ["release", "third returned"] and values == [0, 1, 3]
    assert ok == BLOCKING_TRIALS, f"{ok}/{BLOCKING_TRIALS}"
    return f"{ok}/{BLOCKING_TRIALS} trials"


# -- 8 ------------------------------------------------------------------------

LEAF = "(lambda (j) (let ((start (now_ms))) (begin (sleep_ms 800) (list start (now_ms)))))"


def peak_overlap(intervals):
    edges = sorted([(a, 1) for a, _ in intervals] + [(b, -1) for _, b in intervals], key=lambda e: (e[0], e[1]))
    peak = level = 0
    for _, step in edges:
        level += step
        peak = max(peak, level)
    return peak


@criterion(8, "process_pool:2/process_pool:3 peaks at 4 to 6 concurrent leaves; single layer sees 1 worker")
def test_nested_topology():
    # the controller maps over layer 0; each of its tasks maps over layer 1
    outer = f"(lambda (i) (future_map (seq 1 3) {LEAF}))"
    with Session("process_pool:2/process_pool:3", sinks=RecordingSinks()) as s:
        groups = future_map([1, 2], outer, session=s)
    intervals = [tuple(leaf) for group in groups for leaf in group]
    assert len(intervals) == 6
    peak = peak_overlap(intervals)
    assert 4 <= peak <= 6, peak
    with Session("process_pool:2", sinks=RecordingSinks()) as s:
        assert s.value(s.future("(available_workers)")) == 1
    return f"peak {peak}"


# -- 9 ------------------------------------------------------------------------

@criterion(9, "bench --tasks 8 --task-ms 300 on process_pool:2 takes <= 65% of sequential")
def test_speedup():
    out = subprocess.run(
        [sys.executable, "-m", "futurekit", "bench", "--plan", "process_pool:2", "--tasks", "8", "--task-ms", "300"],
        capture_output=True, text=True, timeout=120, check=True,
    ).stdout
    seq = float(re.search(r"^sequential ([\d.]+) s", out, re.M).group(1))
    par = float(re.search(r"^process_pool:2 ([\d.]+) s", out, re.M).group(1))
    ratio = par / seq
    assert ratio <= 0.65, out
    return f"{ratio:.0%} of sequential"


# -- 10 -----------------------------------------------------------------------

@settings(max_examples=10_000, deadline=None)
@given(values)
def check_value_round_trip(v):
    wire = json.loads(json.dumps(encode_value(v)))
    assert same_value(decode_value(wire), v)


@settings(max_examples=10_000, deadline=None)
@given(task_specs)
def check_task_round_trip(task):
    back = TaskSpec.from_json(json.loads(json.dumps(task.to_json())))
    assert back == task
    assert all(same_value(back.env[k], task.env[k]) for k in task.env)


@criterion(10, "10^4 random values and 10^4 TaskSpecs survive the wire codec bit-exactly")
def test_codec_round_trip():
    check_value_round_trip()
    check_task_round_trip()
