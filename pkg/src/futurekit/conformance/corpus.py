"""The conformance corpus.

Each check is a short program against the Future API.  Expected results are
never written down: the runner executes the same program on the sequential
backend and compares fingerprints.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable

from ..exprlang import Env, Resource, closure
from ..mapreduce import future_either, future_map, value_all

RELAY_PROGRAM = """
(begin
  (print "Hello world")
  (let ((y (sum x true)))
    (begin
      (message (paste "The sum of 'x' is " y))
      (if (any_na x) (warning "Missing values were omitted"))
      (print "Bye bye")
      y)))
"""
RELAY_X = list(range(1, 11)) + [None]

# time for a non-blocking launch to (wrongly) return before the release
RELEASE_PAUSE = 0.1


@dataclass(frozen=True)
class Check:
    id: str
    covers: str
    program: Callable
    doc: str = ""
    session_opts: dict = field(default_factory=dict)


CORPUS: list[Check] = []


def check(id_, covers, **session_opts):
    def deco(fn):
        CORPUS.append(Check(id_, covers, fn, (fn.__doc__ or "").strip(), session_opts))
        return fn
    return deco


# -- values -------------------------------------------------------------------

@check("value.arithmetic", "values")
def _(h):
    h.run("ints", "(+ 1 2 3)")
    h.run("real", "(/ 1 3)")
    h.run("mixed", "(* 2 2.5)")
    h.run("vec", "(+ (vec 1 2 3) 10)")


@check("value.types", "values")
def _(h):
    """Every value type survives the trip back unchanged."""
    h.run("all", '(list 1 -9223372036854775807 2.5 #inf #-inf #nan "héllo\\n\\t\\"q\\"" '
                 'true false null (vec 1 2 3) (vec 1.5 -2.0) (list) (list (list 1) "x"))')


@check("value.real_bits", "values")
def _(h):
    """Reals must come back bit-exact, including signed zero and subnormals."""
    h.run("reals", "(list (/ 1 3) (/ 1 0) (/ -1 0) (* 0.1 3) 5e-324 2.2250738585072014e-308 "
                   "-0.0 (sqrt 2) (exp 1) (log 10) 1.7976931348623157e308)")
    h.run("nan", "(/ 0 0)")


@check("value.closure_result", "values")
def _(h):
    """A closure returned by a future can be used in a later future."""
    add = h.run("make", "(let ((k 10)) (lambda (v) (+ v k)))")
    if add is not None:
        h.run("use", "(add 5)", {"add": add})


@check("value.idempotent", "value idempotence")
def _(h):
    """value() twice gives the same value and relays the output twice."""
    f = h.future('(begin (print "once") (message "m") (list 1 2))')
    h.value("first", f)
    h.value("second", f)


@check("value.try_value", "error taxonomy")
def _(h):
    for label, body in (("ok", "(+ 1 1)"), ("fail", '(error "nope")')):
        out = h.session.try_value(h.future(body))
        h.record(label, {"kind": out.kind, "message": out.message, "class": out.condition_class})


# -- capture ------------------------------------------------------------------

@check("capture.rebind_after_creation", "capture immutability")
def _(h):
    env = Env({"x": 1})
    f = h.future("(+ x 1)", env)
    env.assign("x", 100)
    h.value("frozen", f)
    h.run("fresh", "(+ x 1)", env)


@check("capture.mutation_after_creation", "capture immutability")
def _(h):
    xs = [1, 2, 3]
    env = Env({"xs": xs})
    f = h.future("(sum xs)", env)
    xs.append(4)
    h.value("snapshot", f)


@check("capture.closure_global", "capture immutability")
def _(h):
    add = closure("(lambda (v) (+ v k))", {"k": 10})
    h.run("call", "(add 5)", {"add": add})
    h.run("map", "(map (list 1 2) (lambda (v) (add v)))", {"add": add})


@check("capture.assign_stays_local", "capture immutability")
def _(h):
    """set! inside a future never reaches the creating environment."""
    env = Env({"x": 1})
    h.run("inside", "(begin (set! x 5) x)", env)
    h.record_value("outside", env.lookup("x"))


# -- blocking -----------------------------------------------------------------

@check("blocking.at_capacity", "blocking at capacity")
def _(h):
    """With every worker held on a latch, the next future() waits for a release."""
    cap = h.session.capacity()
    go = h.latch("go")
    started = [h.path(f"started{i}") for i in range(cap)]
    events = []

    def releaser():
        for p in started:
            h.wait_for(p)
        time.sleep(RELEASE_PAUSE)
        events.append("release")
        h.release(go)

    h.background(releaser)
    fs = []
    for i in range(cap + 1):
        env = {"s": started[i] if i < cap else h.path("extra"), "go": go, "i": i}
        fs.append(h.future("(begin (touch s) (wait_file go 60000) i)", env))
        events.append(f"created{i}")
    h.record("extra_waited_for_release", events.index(f"created{cap}") > events.index("release"))
    h.attempt("values_are_ordinals", lambda: all(v == i for i, v in enumerate(value_all(fs))))


# -- errors -------------------------------------------------------------------

@check("error.relayed_with_output", "error relay")
def _(h):
    h.run("boom", '(begin (print "before") (message "m") (warning "w") (error "boom " 42))')


@check("error.log_non_numeric", "error relay")
def _(h):
    h.run("log", "(log x)", {"x": "24"})


@check("error.runtime_conditions", "error relay")
def _(h):
    h.run("overflow", "(+ 9223372036854775807 1)")
    h.run("index", "(nth (list 1 2) 5)")
    h.run("arity", "(let ((f (lambda (a b) a))) (f 1))")
    h.run("type", '(+ 1 "a")')


@check("error.unknown_function", "missing-global failure")
def _(h):
    h.run("unknown", "(frobnicate 1)")


# -- relay --------------------------------------------------------------------

@check("relay.example_order", "stdout/condition ordering")
def _(h):
    h.run("v", RELAY_PROGRAM, {"x": RELAY_X})


@check("relay.interleaved", "stdout/condition ordering")
def _(h):
    h.run("v", '(begin (message "a") (print 1) (warning "w1") (print 2) (message "b") (warning "w2") 7)')


@check("relay.stdout_not_captured", "stdout/condition ordering")
def _(h):
    h.run("v", '(begin (print "hidden") (message "shown") 3)', stdout=False)


@check("relay.several_futures", "stdout/condition ordering")
def _(h):
    """Relay follows value() call order, not creation order."""
    fs = [h.future(f'(begin (print "out{i}") (message "msg{i}") {i})') for i in range(3)]
    for i in (2, 0, 1):
        h.value(f"v{i}", fs[i])


@check("immediate.delivered_once", "immediateCondition delivery")
def _(h):
    f = h.future('(begin (progress "p1") (message "m") (progress "p2" 0.5) (print "o") 1)')
    h.value("first", f)
    h.value("second", f)
    h.record("delivered", f.relayed_immediate_count)


@check("immediate.before_value", "immediateCondition delivery")
def _(h):
    """Polling delivers immediates; other records wait for value()."""
    f = h.future('(begin (progress "tick") (message "later") (print "out") 2)')
    while not h.session.resolved(f):
        time.sleep(0.001)
    h.record("after_poll", [list(e) for e in h.sinks.events])
    h.value("v", f)


# -- globals ------------------------------------------------------------------

@check("globals.missing", "missing-global failure")
def _(h):
    h.attempt("create", lambda: h.future("(+ y 1)", {"x": 1}) and None)


@check("globals.dynamic_lookup", "globals override")
def _(h):
    h.run("without", '(lookup "k")', {"k": 42})
    h.run("with", '(lookup "k")', {"k": 42}, globals=["k"])


@check("globals.override_missing", "globals override")
def _(h):
    h.attempt("create", lambda: h.future("(+ 1 1)", {}, globals=["nope"]) and None)


@check("globals.conditional_assign", "missing-global failure")
def _(h):
    """A set! in one branch does not bind the name for later code."""
    h.run("bound", "(begin (if c (set! x 1) null) x)", {"c": True, "x": 0})
    h.attempt("unbound", lambda: h.future("(begin (if c (set! x 1) null) x)", {"c": True}) and None)


# -- non-exportable -----------------------------------------------------------

@check("nonexportable.direct", "non-exportable rejection")
def _(h):
    h.attempt("create", lambda: h.future("(resource_info con)", {"con": Resource("db")}) and None)


@check("nonexportable.nested", "non-exportable rejection")
def _(h):
    fn = closure("(lambda () (resource_info con))", {"con": Resource("db")})
    h.attempt("in_closure", lambda: h.future("(fn)", {"fn": fn}) and None)
    h.attempt("in_list", lambda: h.future("(length xs)", {"xs": [1, Resource("db")]}) and None)


@check("nonexportable.local_use", "non-exportable rejection")
def _(h):
    h.run("local", '(resource_info (make_resource "db"))')


# -- rng ----------------------------------------------------------------------

@check("rng.seeded_reproducible", "seeded RNG reproducibility")
def _(h):
    h.run("u", "(runif 3)", seed=True)
    h.run("n", "(rnorm 4 10 2)", seed=True)
    h.run("fresh_session", "(runif 3)", session=h.new_session(), seed=True)


@check("rng.seeded_streams_distinct", "seeded RNG reproducibility")
def _(h):
    a = h.future("(runif 2)", seed=True)
    b = h.future("(runif 2)", seed=True)
    va, vb = h.value("a", a), h.value("b", b)
    h.record("distinct", va != vb)


@check("rng.misuse_warning", "RNG misuse warning")
def _(h):
    h.run("len", "(length (runif 2))")


@check("rng.misuse_error", "RNG misuse warning", rng_misuse="error")
def _(h):
    h.run("len", "(length (runif 2))")


@check("rng.misuse_ignore", "RNG misuse warning", rng_misuse="ignore")
def _(h):
    h.run("len", "(length (rnorm 2))")


# -- nesting ------------------------------------------------------------------

@check("nested.sequential_default", "nested-plan sequential default")
def _(h):
    h.run("workers", "(list (available_workers) (nworkers))")


@check("nested.futures_inside", "nested-plan sequential default")
def _(h):
    h.run("inner", '(future_map (seq 1 4) (lambda (i) (begin (message (paste "i=" i)) (print i) (* i i))))')


@check("nested.seeded_inside", "seeded RNG reproducibility")
def _(h):
    h.run("inner", "(future_map (seq 1 3) (lambda (i) (runif 1)) true)", seed=True)


# -- lazy ---------------------------------------------------------------------

@check("lazy.deferred_launch", "lazy futures")
def _(h):
    p = h.path("side_effect")
    f = h.future("(begin (touch p) 1)", {"p": p}, lazy=True)
    h.record("state", f.state)
    h.record("not_run", not os.path.exists(p))
    h.record("first_resolved", h.session.resolved(f))
    h.record("state_after", f.state)
    h.value("v", f)
    h.record("ran", os.path.exists(p))


@check("lazy.value_directly", "lazy futures")
def _(h):
    f = h.future('(begin (message "lazy") 5)', lazy=True)
    h.value("v", f)


# -- collections --------------------------------------------------------------

@check("value_all.handle_order", "value idempotence")
def _(h):
    fs = [h.future(f"(begin (sleep_ms {ms}) (print {i}) {i})") for i, ms in enumerate((60, 0, 30))]
    h.attempt("ok", lambda: value_all(fs))
    bad = [h.future("1"), h.future('(error "second")'), h.future('(error "third")')]
    h.attempt("first_failure", lambda: value_all(bad))
    h.attempt("empty", lambda: value_all([]))


@check("future_map.equivalence", "future_map equivalence")
def _(h):
    fn = "(lambda (v) (* v v))"
    for chunks in ("auto", 1, 3, 10):
        h.attempt(f"chunks={chunks}", lambda: future_map(range(1, 11), fn, chunks=chunks, session=h.session))
    h.attempt("empty", lambda: future_map([], fn, session=h.session))


@check("future_map.seeded_chunk_invariant", "future_map equivalence")
def _(h):
    out = []
    for chunks in (1, 2, 5):
        s = h.new_session()
        out.append(h.attempt(f"chunks={chunks}", lambda: future_map(
            range(10), "(lambda (v) (rnorm 1))", chunks=chunks, seed=True, session=s)))
    h.record("identical", out[0] == out[1] == out[2])


@check("future_map.error", "future_map equivalence")
def _(h):
    fn = '(lambda (v) (if (== v 3) (error "bad element " v) v))'
    h.attempt("err", lambda: future_map(range(1, 7), fn, chunks=3, session=h.session))


@check("future_either.first_finisher", "future_either")
def _(h):
    go, seen = h.latch("either"), h.path("either-seen")
    bodies = ["(begin (touch go) 1)", "(begin (wait_file go 60000) (touch seen) (sleep_ms 150) 2)"]
    h.attempt("winner", lambda: future_either(bodies, {"go": go, "seen": seen}, session=h.session))
    # the loser may start after the winner returned; keep the latch dir
    # alive until it has looked, or it would sit out its whole timeout
    h.wait_for(seen)


@check("future_either.single_and_error", "future_either")
def _(h):
    h.attempt("single", lambda: future_either(['(begin (message "only") 9)'], session=h.session))
    h.attempt("error", lambda: future_either(['(error "first")'], session=h.session))
