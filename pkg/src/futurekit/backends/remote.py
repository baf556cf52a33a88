"""Shared machinery for backends whose workers sit behind a message channel."""
from __future__ import annotations

import itertools
import select
from dataclasses import dataclass, field

from ..errors import FutureError, ProtocolError
from ..protocol import PONG, RELAY, RESULT, RUN, SHUTDOWN, Channel, ChannelClosed, message
from ..relay import RelayRecord
from ..task import FutureOutcome
from .spi import Backend, PollResult

IDLE, BUSY, DEAD = "idle", "busy", "dead"


@dataclass(frozen=True)
class Ticket:
    future_id: str
    worker: int
    serial: int


@dataclass(eq=False)
class WorkerConn:
    channel: Channel
    label: str
    pid: int | None = None
    process: object = None  # subprocess.Popen for local workers
    state: str = IDLE
    ticket: Ticket | None = None
    served: int = field(default=0)


class ChannelBackend(Backend):
    """Assigns each launch to an idle worker connection.

    Only the controller thread touches the channels; messages are read when
    ``launch`` (waiting for a free slot), ``poll`` or ``collect`` run.
    """

    def __init__(self, workers: list[WorkerConn]):
        self.workers = workers
        self._serial = itertools.count()
        self._results: dict[Ticket, object] = {}
        self._immediate: dict[Ticket, list[RelayRecord]] = {}
        self._inflight: set[Ticket] = set()
        self._discarded: set[Ticket] = set()

    # -- bookkeeping --------------------------------------------------------

    def capacity(self) -> int:
        return sum(1 for w in self.workers if w.state != DEAD)

    def counts(self) -> dict[str, int]:
        out = {IDLE: 0, BUSY: 0, DEAD: 0}
        for w in self.workers:
            out[w.state] += 1
        return out

    def _mark_dead(self, conn: WorkerConn, reason: str) -> None:
        if conn.state == DEAD:
            return
        conn.state = DEAD
        conn.channel.close()
        if conn.process is not None:
            try:
                conn.process.kill()
                conn.process.wait(timeout=5)
            except Exception:
                pass
        ticket, conn.ticket = conn.ticket, None
        if ticket is not None:
            err = FutureError(
                f"worker {conn.label} (pid {conn.pid}) was lost while resolving "
                f"future {ticket.future_id}: {reason}",
                retryable=True,
            )
            self._settle(ticket, err)

    def _settle(self, ticket: Ticket, result) -> None:
        if ticket in self._discarded:
            self._discarded.discard(ticket)
            self._inflight.discard(ticket)
            self._immediate.pop(ticket, None)
            return
        self._results[ticket] = result

    def _dispatch(self, conn: WorkerConn, msg: dict) -> None:
        kind = msg["type"]
        ticket = conn.ticket
        if kind == PONG:
            return
        if ticket is None or msg.get("future_id") != ticket.future_id:
            raise ProtocolError(f"unexpected {kind} for future {msg.get('future_id')!r}")
        if kind == RELAY:
            if ticket not in self._discarded:
                self._immediate.setdefault(ticket, []).append(RelayRecord.from_wire(msg["payload"]))
        elif kind == RESULT:
            outcome = FutureOutcome.from_json(msg["payload"])
            conn.state, conn.ticket = IDLE, None
            conn.served += 1
            self._settle(ticket, outcome)
        else:
            raise ProtocolError(f"unexpected {kind} from worker")

    def _pump(self, conns, timeout) -> None:
        """Read from whichever of ``conns`` is readable, waiting up to ``timeout``."""
        live = [c for c in conns if c.state != DEAD]
        if not live:
            return
        by_fd = {c.channel.fileno(): c for c in live}
        readable, _, _ = select.select(list(by_fd), [], [], timeout)
        for fd in readable:
            conn = by_fd[fd]
            try:
                conn.channel.fill()
                while (msg := conn.channel.next_buffered()) is not None:
                    self._dispatch(conn, msg)
            except ChannelClosed as e:
                self._mark_dead(conn, e.message)
            except (ProtocolError, ValueError, KeyError) as e:
                self._mark_dead(conn, f"protocol violation: {e}")

    # -- the contract -------------------------------------------------------

    def launch(self, task):
        payload = task.to_json()
        while True:
            conn = next((w for w in self.workers if w.state == IDLE), None)
            if conn is None:
                busy = [w for w in self.workers if w.state == BUSY]
                if not busy:
                    raise FutureError("no live workers left to launch on", retryable=True)
                self._pump(busy, None)
                continue
            ticket = Ticket(task.id, self.workers.index(conn), next(self._serial))
            try:
                conn.channel.send(message(RUN, task.id, 0, payload))
            except ChannelClosed as e:
                self._mark_dead(conn, e.message)
                continue
            conn.state, conn.ticket = BUSY, ticket
            self._inflight.add(ticket)
            return ticket

    def _known(self, ticket):
        if ticket not in self._inflight:
            raise FutureError(f"unknown or already collected ticket {ticket!r}")

    def poll(self, ticket) -> PollResult:
        self._known(ticket)
        if ticket not in self._results:
            self._pump([w for w in self.workers if w.state == BUSY], 0)
        return PollResult(ticket in self._results, self._immediate.pop(ticket, []))

    def collect(self, ticket):
        self._known(ticket)
        conn = self.workers[ticket.worker]
        while ticket not in self._results:
            if conn.state == DEAD or conn.ticket != ticket:
                raise FutureError(f"worker {conn.label} no longer holds {ticket!r}")
            self._pump([conn], None)
        result = self._results.pop(ticket)
        self._inflight.discard(ticket)
        self._immediate.pop(ticket, None)
        if isinstance(result, FutureError):
            raise result
        return result

    def discard(self, ticket) -> None:
        if ticket in self._results:
            self._results.pop(ticket)
            self._inflight.discard(ticket)
            self._immediate.pop(ticket, None)
        elif ticket in self._inflight:
            self._discarded.add(ticket)
            self._immediate.pop(ticket, None)

    def _close_all(self, say_goodbye: bool) -> None:
        for w in self.workers:
            if w.state != DEAD and say_goodbye:
                try:
                    w.channel.send(message(SHUTDOWN))
                except FutureError:
                    pass
            w.channel.close()
            w.state = DEAD
        self._inflight.clear()
        self._results.clear()
