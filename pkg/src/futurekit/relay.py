"""Capture of output and conditions on the worker, ordered replay on the controller.

Replay order: every stdout record first, then messages and warnings in the
order they were signaled.  Immediate records (progress and the like) bypass
that order and are delivered at most once, as early as the transport allows.
"""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field

from .errors import EvalError, FutureError
from .exprlang import REGISTRY, Env, EvalContext, decode_value, encode_value, evaluate
from .rng import RngCursor

STDOUT, MESSAGE, WARNING, IMMEDIATE = "stdout", "message", "warning", "immediate"
KINDS = (STDOUT, MESSAGE, WARNING, IMMEDIATE)


@dataclass(frozen=True)
class RelayRecord:
    kind: str
    payload: str
    seq: int
    cls: str | None = None  # immediate only
    data: object = None  # immediate only

    def to_wire(self) -> dict:
        d = {"type": "relay", "kind": self.kind, "seq": self.seq, "payload": self.payload}
        if self.kind == IMMEDIATE:
            d["class"] = self.cls
            d["data"] = encode_value(self.data)
        return d

    @classmethod
    def from_wire(cls, d: dict) -> RelayRecord:
        if d.get("type") != "relay" or d.get("kind") not in KINDS:
            raise ValueError(f"not a relay record: {d!r}")
        if not isinstance(d["seq"], int) or not isinstance(d["payload"], str):
            raise ValueError("bad relay record fields")
        if d["kind"] == IMMEDIATE:
            return cls(IMMEDIATE, d["payload"], d["seq"], d.get("class"), decode_value(d["data"]))
        return cls(d["kind"], d["payload"], d["seq"])


class CaptureContext:
    """Per-evaluation recorder; ``on_immediate`` pushes immediates out live."""

    def __init__(self, on_immediate=None):
        self.records: list[RelayRecord] = []
        self.on_immediate = on_immediate

    def _add(self, kind, payload, cls=None, data=None) -> RelayRecord:
        rec = RelayRecord(kind, payload, len(self.records), cls, data)
        self.records.append(rec)
        return rec

    def stdout(self, text):
        self._add(STDOUT, text)

    def message(self, text):
        self._add(MESSAGE, text)

    def warning(self, text):
        self._add(WARNING, text)

    def immediate(self, text, cls="immediateCondition", data=None):
        rec = self._add(IMMEDIATE, text, cls, data)
        if self.on_immediate is not None:
            self.on_immediate(rec)

    def stderr(self, text):
        pass  # standard error is not relayed


# -- controller-side sinks ----------------------------------------------------

class ConsoleSinks:
    """Relay to the controller's own stdout/stderr, looked up at call time."""

    def stdout(self, text):
        sys.stdout.write(text)
        # stdout and stderr may share a terminal; keep their relative order
        sys.stdout.flush()

    def condition(self, record: RelayRecord):
        if record.kind == WARNING:
            sys.stderr.write(f"Warning message:\n{record.payload}\n")
        else:
            sys.stderr.write(record.payload + "\n")


class RecordingSinks:
    """Keeps ``(kind, payload)`` events in emission order."""

    def __init__(self):
        self.events: list[tuple[str, str]] = []

    def stdout(self, text):
        self.events.append((STDOUT, text))

    def condition(self, record: RelayRecord):
        self.events.append((record.kind, record.payload))

    def stdout_text(self) -> str:
        return "".join(p for k, p in self.events if k == STDOUT)


class CaptureSinks:
    """Sinks that feed relayed records into an enclosing capture context.

    Used by futures created inside a worker so that their output ends up in
    the outer future's relay log.
    """

    def __init__(self, capture: CaptureContext):
        self.capture = capture

    def stdout(self, text):
        self.capture.stdout(text)

    def condition(self, record: RelayRecord):
        if record.kind == MESSAGE:
            self.capture.message(record.payload)
        elif record.kind == WARNING:
            self.capture.warning(record.payload)
        else:
            self.capture.immediate(record.payload, record.cls, record.data)


def relay_immediate(record: RelayRecord, sinks, delivered: set) -> None:
    if record.seq not in delivered:
        delivered.add(record.seq)
        sinks.condition(record)


def replay(records, sinks, delivered: set | None = None) -> None:
    """Emit one future's records: pending immediates, stdout, then conditions."""
    if delivered is None:
        delivered = set()
    ordered = sorted(records, key=lambda r: r.seq)
    for rec in ordered:
        if rec.kind == IMMEDIATE:
            relay_immediate(rec, sinks, delivered)
    for rec in ordered:
        if rec.kind == STDOUT:
            sinks.stdout(rec.payload)
    for rec in ordered:
        if rec.kind in (MESSAGE, WARNING):
            sinks.condition(rec)


# -- worker-side evaluation ---------------------------------------------------

class _NestedSession:
    """Lazily built session for futures created while a task evaluates."""

    def __init__(self, task, capture):
        self.task = task
        self.capture = capture
        self.session = None

    def get(self):
        if self.session is None:
            from .core import Session
            from .backends.spi import Plan
            words = self.task.rng_stream.words() if self.task.rng_stream else [0]
            seed = 0
            for w in words:
                seed = (seed * 0x100000001B3 + w) & ((1 << 64) - 1)
            plan = Plan(list(self.task.plan_tail)) if self.task.plan_tail else None
            self.session = Session(plan=plan, seed=seed, sinks=CaptureSinks(self.capture))
        return self.session

    def close(self):
        if self.session is not None:
            self.session.shutdown()


def capture_run(task, on_immediate=None, registry=REGISTRY):
    """Evaluate a task under capture; all failures are encoded in the outcome."""
    from .backends.spi import nesting
    from .task import FutureOutcome

    capture = CaptureContext(on_immediate)
    cursor = RngCursor(task.rng_stream) if task.seed and task.rng_stream else None
    nested = _NestedSession(task, capture)
    ctx = EvalContext(
        registry,
        capture=capture,
        rng=cursor,
        session=nested.get,
        stdout_capture=task.stdout_capture,
    )
    start = time.monotonic()
    with nesting():
        try:
            value = evaluate(task.body, Env(dict(task.env)), ctx)
            kind = ("success", value)
        except EvalError as e:
            kind = ("eval_failure", e.message, e.condition_class)
        except FutureError as e:
            kind = ("eval_failure", e.message, "FutureError")
        except Exception as e:  # a bug in a builtin must not kill the worker
            kind = ("eval_failure", f"{type(e).__name__}: {e}", "internalError")
        finally:
            try:
                nested.close()
            except Exception:
                pass
    elapsed = int((time.monotonic() - start) * 1000)
    return FutureOutcome.from_kind(kind, list(capture.records), ctx.rng_used, elapsed)
