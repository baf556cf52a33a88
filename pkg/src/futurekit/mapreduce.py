"""Chunked map, collection-valued value() and first-finisher selection.

Everything here is written against the public Session surface: create,
poll with ``resolved``, collect with ``settle``/``value``.
"""
from __future__ import annotations

import time

from .core import TERMINAL, Future, Session, current_session, raise_for
from .errors import EvalError, FutureError
from .exprlang import Closure, Vec, closure, parse
from .rng import stream_for
from .task import EVAL_FAILURE

_CHUNK_BODY = parse("(map_elements _fm_f _fm_xs _fm_seeds)")


def chunk_sizes(n: int, k: int) -> list[int]:
    """Split ``n`` items into ``k`` contiguous chunks differing by at most one."""
    if n == 0:
        return []
    k = max(1, min(k, n))
    base, extra = divmod(n, k)
    return [base + 1 if i < extra else base for i in range(k)]


def _as_closure(fn, env) -> Closure:
    if isinstance(fn, Closure):
        return fn
    if isinstance(fn, str):
        return closure(fn, env)
    raise TypeError("fn must be a Closure or lambda source text")


def value_all(handles: list[Future]) -> list:
    """Values of ``handles`` in handle order.

    Futures are collected as they finish.  Relay happens in handle order, as
    soon as every earlier handle has been collected, so the console output is
    the same as a plain loop over ``value()``.  If any failed, the error of
    the first failed handle is raised once all are terminal.
    """
    handles = list(handles)
    pending = list(range(len(handles)))
    relayed = 0
    while pending:
        for i in list(pending):
            f = handles[i]
            if f.session.resolved(f):
                pending.remove(i)
        if pending and handles[pending[0]].state not in TERMINAL:
            # nothing new at the head: block on it rather than spin
            f = handles[pending[0]]
            f.session.settle(f)
            pending.pop(0)
        while relayed < len(handles) and handles[relayed].state in TERMINAL:
            f = handles[relayed]
            f.session.relay(f)
            relayed += 1
    return [raise_for(f.outcome) for f in handles]


def future_map(xs, fn, chunks="auto", seed=False, env=None, session: Session | None = None) -> list:
    """Map ``fn`` over ``xs`` with one future per contiguous chunk.

    ``chunks="auto"`` gives one chunk per worker.  With ``seed``, element i
    draws from its own stream, so the result does not depend on chunking.
    """
    session = session or current_session()
    xs = list(xs)
    fn = _as_closure(fn, env)
    n = len(xs)
    if n == 0:
        return []
    k = session.capacity() if chunks == "auto" else int(chunks)
    sizes = chunk_sizes(n, k)
    # one ordinal per element whatever the chunking, so later futures see
    # the same counter on every backend
    base = session.reserve_ordinals(n)
    streams = None
    if seed:
        streams = [Vec("int", tuple(stream_for(session.seed, base + i).words())) for i in range(n)]
    futures, start = [], 0
    for size in sizes:
        stop = start + size
        env_ = {
            "_fm_f": fn,
            "_fm_xs": xs[start:stop],
            "_fm_seeds": streams[start:stop] if streams else None,
        }
        futures.append(session.future(_CHUNK_BODY, env_, seed=bool(seed), ordinal=base + start))
        start = stop
    out = []
    for part in value_all(futures):
        out.extend(part)
    return out


def future_either(bodies, env=None, session: Session | None = None, poll_interval=0.002):
    """Value of whichever future resolves first; the rest are abandoned.

    Ties (several already resolved when first seen) go to the lowest index.
    A failed first finisher raises its own error; if every future has
    already failed, a composite error is raised instead.
    """
    session = session or current_session()
    bodies = list(bodies)
    if not bodies:
        raise ValueError("future_either needs at least one body")
    futures = [session.future(b, env) for b in bodies]
    winner = None
    while winner is None:
        for f in futures:
            if session.resolved(f):
                winner = f
                break
        else:
            time.sleep(poll_interval)
    if not winner.outcome.ok:
        for f in futures:
            session.resolved(f)  # non-blocking look at the others
    for f in futures:
        if f is not winner and f.state not in TERMINAL:
            session.abandon(f)
    if not winner.outcome.ok and all(f.state in TERMINAL and not f.outcome.ok for f in futures):
        for f in futures:
            session.relay(f)
        msgs = "; ".join(f"[{i}] {f.outcome.message}" for i, f in enumerate(futures))
        if all(f.outcome.kind == EVAL_FAILURE for f in futures):
            raise EvalError(f"all {len(futures)} futures failed: {msgs}", "CompositeError")
        raise FutureError(f"all {len(futures)} futures failed: {msgs}")
    return session.value(winner)
