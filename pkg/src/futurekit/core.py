"""The Future API: ``future()``, ``value()``, ``resolved()``.

A :class:`Session` owns the active plan and backend, the creation counter
that numbers futures, and the session seed from which seeded futures get
their RNG streams.  Module-level functions act on the current session.
"""
from __future__ import annotations

import contextvars
import os
import uuid
from dataclasses import dataclass, field

from .backends.spi import Plan, make_backend
from .errors import EvalError, FutureError, MissingGlobalError, NonExportableError, RngMisuseError
from .exprlang import REGISTRY, Closure, Env, Expr, free_vars, parse, to_value
from .exprlang.values import contains_resource
from .relay import WARNING, ConsoleSinks, RelayRecord, relay_immediate, replay
from .rng import stream_for
from .task import EVAL_FAILURE, INFRA_FAILURE, SUCCESS, FutureOutcome, TaskSpec

CREATED, LAUNCHED, RUNNING, RESOLVED, FAILED = "created", "launched", "running", "resolved", "failed"
TERMINAL = (RESOLVED, FAILED)

RNG_MISUSE_MODES = ("warning", "error", "ignore")
RNG_MISUSE_CLASS = "RngMisuseError"


@dataclass(eq=False)
class Future:
    id: str
    ordinal: int
    task: TaskSpec
    session: "Session"
    label: str | None = None
    state: str = CREATED
    ticket: object = None
    outcome: FutureOutcome | None = None
    relay_log: tuple = ()
    delivered: set = field(default_factory=set)  # seqs of immediates already relayed
    abandoned: bool = False

    @property
    def relayed_immediate_count(self) -> int:
        return len(self.delivered)

    def __repr__(self):
        name = f" {self.label!r}" if self.label else ""
        return f"<Future #{self.ordinal}{name} {self.state}>"


def _snapshot(v):
    """Copy the mutable parts of a value so later caller edits cannot leak in."""
    if isinstance(v, list):
        return [_snapshot(x) for x in v]
    if isinstance(v, Closure):
        return Closure(v.params, v.body, {k: _snapshot(x) for k, x in v.env.items()})
    return v


def _as_env(env) -> Env:
    if env is None:
        return Env()
    if isinstance(env, Env):
        return env
    return Env({k: to_value(v) for k, v in env.items()})


class Session:
    """One controller context.

    ``rng_misuse`` decides what happens when an unseeded future draws random
    numbers: ``"warning"`` (relay a warning), ``"error"`` or ``"ignore"``.
    ``scan_nonexportable`` rejects globals holding resources at creation.
    """

    def __init__(self, plan=None, seed=None, *, sinks=None, rng_misuse="warning",
                 scan_nonexportable=True, registry=REGISTRY):
        if rng_misuse not in RNG_MISUSE_MODES:
            raise ValueError(f"rng_misuse must be one of {RNG_MISUSE_MODES}")
        self.id = str(uuid.uuid4())
        self.seed = int.from_bytes(os.urandom(8), "big") if seed is None else int(seed)
        self.sinks = sinks if sinks is not None else ConsoleSinks()
        self.rng_misuse = rng_misuse
        self.scan_nonexportable = scan_nonexportable
        self.registry = registry
        self._names = frozenset(registry)
        self._next_ordinal = 0
        self._plan = None
        self._backend = None
        self._token = None
        self.set_plan(plan)

    # -- plan ---------------------------------------------------------------

    def set_plan(self, plan) -> None:
        """Install layer 0 as the backend; the rest travels with each task.

        ``"auto"`` worker counts are resolved here, once.
        """
        plan = Plan.coerce(plan)
        head = plan.head.resolved()
        backend = make_backend(head)
        if self._backend is not None:
            self._backend.shutdown()
        self._backend = backend
        self._plan = Plan([head, *plan.tail])

    def use_backend(self, backend, plan=None) -> None:
        """Install a ready-made backend (custom or instrumented)."""
        if self._backend is not None:
            self._backend.shutdown()
        self._backend = backend
        self._plan = Plan.coerce(plan)

    @property
    def plan(self) -> Plan:
        return self._plan

    @property
    def backend(self):
        return self._backend

    def capacity(self) -> int:
        return self._backend.capacity()

    def reserve_ordinals(self, n: int) -> int:
        """Claim ``n`` consecutive creation ordinals; returns the first."""
        base = self._next_ordinal
        self._next_ordinal += n
        return base

    # -- creation -----------------------------------------------------------

    def capture(self, expr: Expr, env, globals=None) -> dict:
        env = _as_env(env)
        names = free_vars(expr, self._names)
        for name in globals or ():
            if name not in names:
                names.append(name)
        captured = {}
        for name in names:
            scope = env.find(name)
            if scope is None:
                raise MissingGlobalError(name)
            captured[name] = _snapshot(scope.bindings[name])
        if self.scan_nonexportable:
            for name, v in captured.items():
                bad = contains_resource(v)
                if bad is not None:
                    raise NonExportableError(name, bad)
        return captured

    def future(self, body, env=None, *, seed=False, lazy=False, globals=None,
               stdout=True, label=None, rng_stream=None, ordinal=None) -> Future:
        """Create a future for ``body`` (source text or parsed expression).

        Globals are captured from ``env`` by value now.  Unless ``lazy``, the
        task is launched right away, waiting for a free worker if needed.
        ``ordinal`` places the future inside a block from ``reserve_ordinals``.
        """
        expr = parse(body) if isinstance(body, str) else body
        captured = self.capture(expr, env, globals)
        if ordinal is None:
            ordinal = self.reserve_ordinals(1)
        if seed and rng_stream is None:
            rng_stream = stream_for(self.seed, ordinal)
        task = TaskSpec(
            id=uuid.uuid4().hex,
            body=expr,
            env=captured,
            seed=bool(seed),
            rng_stream=rng_stream if seed else None,
            lazy=bool(lazy),
            globals_override=tuple(globals) if globals is not None else None,
            stdout_capture=bool(stdout),
            plan_tail=self._plan.tail,
        )
        f = Future(task.id, ordinal, task, self, label)
        if not lazy:
            self._launch(f)
            self._drain(f)
        return f

    # -- lifecycle ----------------------------------------------------------

    def _own(self, f: Future) -> None:
        if f.session is not self:
            raise FutureError("future belongs to a different session")

    def _launch(self, f: Future) -> None:
        f.ticket = self._backend.launch(f.task)
        f.state = LAUNCHED

    def _drain(self, f: Future) -> bool:
        """Non-blocking poll; relays pending immediates; True when done."""
        res = self._backend.poll(f.ticket)
        for rec in res.immediate:
            relay_immediate(rec, self.sinks, f.delivered)
        if f.state == LAUNCHED:
            f.state = RUNNING
        return res.done

    def _check_rng(self, f: Future, outcome: FutureOutcome) -> FutureOutcome:
        if not outcome.rng_used or f.task.seed or outcome.kind == INFRA_FAILURE:
            return outcome
        if self.rng_misuse == "ignore":
            return outcome
        text = (
            "UNRELIABLE VALUE: a future unexpectedly generated random numbers "
            "without declaring seed=true; those numbers are not from a "
            "parallel-safe stream and are not reproducible"
        )
        if self.rng_misuse == "warning":
            outcome.relay.append(RelayRecord(WARNING, text, len(outcome.relay)))
            return outcome
        return FutureOutcome(INFRA_FAILURE, message=text, condition_class=RNG_MISUSE_CLASS,
                             relay=outcome.relay, rng_used=True,
                             wall_time_ms=outcome.wall_time_ms)

    def settle(self, f: Future) -> FutureOutcome:
        """Block until ``f`` is terminal, without relaying."""
        self._own(f)
        if f.state in TERMINAL:
            return f.outcome
        try:
            if f.state == CREATED:
                self._launch(f)
            if f.state == LAUNCHED:
                f.state = RUNNING
            outcome = self._backend.collect(f.ticket)
        except FutureError as e:
            outcome = FutureOutcome.infra(e.message, e.retryable)
        outcome = self._check_rng(f, outcome)
        f.outcome = outcome
        f.relay_log = tuple(outcome.relay)
        f.state = RESOLVED if outcome.kind == SUCCESS else FAILED
        return outcome

    def relay(self, f: Future) -> None:
        replay(f.relay_log, self.sinks, f.delivered)

    def resolved(self, f: Future) -> bool:
        self._own(f)
        if f.state in TERMINAL:
            return True
        if f.state == CREATED:
            self._launch(f)
            return False
        if self._drain(f):
            self.settle(f)
        return f.state in TERMINAL

    def try_value(self, f: Future) -> FutureOutcome:
        outcome = self.settle(f)
        self.relay(f)
        return outcome

    def value(self, f: Future):
        return raise_for(self.try_value(f))

    def abandon(self, f: Future) -> None:
        """Stop caring about ``f``; a running task finishes and is dropped."""
        self._own(f)
        if f.state not in TERMINAL and f.ticket is not None:
            self._backend.discard(f.ticket)
        f.abandoned = True

    # -- teardown -----------------------------------------------------------

    def shutdown(self) -> None:
        if self._backend is not None:
            self._backend.shutdown()

    def __enter__(self):
        self._token = _current.set(self)
        return self

    def __exit__(self, *exc):
        if self._token is not None:
            _current.reset(self._token)
            self._token = None
        self.shutdown()


def raise_for(outcome: FutureOutcome):
    """Return the value of a successful outcome, otherwise raise its error."""
    if outcome.kind == SUCCESS:
        return outcome.value
    if outcome.kind == EVAL_FAILURE:
        raise EvalError(outcome.message, outcome.condition_class)
    if outcome.condition_class == RNG_MISUSE_CLASS:
        raise RngMisuseError(outcome.message)
    raise FutureError(outcome.message, outcome.retryable)


# -- module-level API ---------------------------------------------------------

_current: contextvars.ContextVar[Session | None] = contextvars.ContextVar("futurekit_session", default=None)
_default: Session | None = None


def current_session() -> Session:
    global _default
    session = _current.get()
    if session is not None:
        return session
    if _default is None:
        _default = Session()
    return _default


def plan(new_plan=None) -> Plan:
    """Get, or set and return, the plan of the current session."""
    session = current_session()
    if new_plan is not None:
        session.set_plan(new_plan)
    return session.plan


def future(body, env=None, **opts) -> Future:
    return current_session().future(body, env, **opts)


def value(f: Future):
    return f.session.value(f)


def resolved(f: Future) -> bool:
    return f.session.resolved(f)


def try_value(f: Future) -> FutureOutcome:
    return f.session.try_value(f)
