"""Inline evaluation in the controller process."""
from __future__ import annotations

import itertools

from ..errors import FutureError
from ..relay import IMMEDIATE, capture_run
from .spi import SEQUENTIAL, Backend, PollResult


class SequentialBackend(Backend):
    """Capacity 1; ``launch`` evaluates the task before returning."""

    kind = SEQUENTIAL

    def __init__(self):
        self._ids = itertools.count()
        self._outcomes = {}
        self._pending_immediate = {}

    def launch(self, task):
        ticket = next(self._ids)
        outcome = capture_run(task)
        self._outcomes[ticket] = outcome
        self._pending_immediate[ticket] = [r for r in outcome.relay if r.kind == IMMEDIATE]
        return ticket

    def poll(self, ticket):
        self._check(ticket)
        return PollResult(True, self._pending_immediate.pop(ticket, []))

    def collect(self, ticket):
        self._check(ticket)
        self._pending_immediate.pop(ticket, None)
        return self._outcomes.pop(ticket)

    def discard(self, ticket):
        self._outcomes.pop(ticket, None)
        self._pending_immediate.pop(ticket, None)

    def capacity(self):
        return 1

    def _check(self, ticket):
        if ticket not in self._outcomes:
            raise FutureError(f"unknown or already collected ticket {ticket!r}")


def sequential_backend() -> SequentialBackend:
    return SequentialBackend()
