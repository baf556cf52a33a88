"""Controller/worker wire protocol and the worker serving loop.

Each frame is a 4-byte big-endian unsigned length followed by that many
bytes of UTF-8 JSON.  A message body is
``{"type": ..., "future_id": ..., "seq": n, "payload": {...}}``.
The controller opens with HELLO, the worker answers HELLO_ACK, both carrying
``{"protocol": 1}``.  For each RUN the worker sends zero or more RELAY
messages (immediate records, live) and then exactly one RESULT.

There is no authentication or encryption: trusted networks only.
"""
from __future__ import annotations

import json
import os
import select
import signal
import socket
import struct
import sys

from .errors import FutureError, NonExportableError, ProtocolError

PROTOCOL_VERSION = 1
MAX_FRAME = 256 * 1024 * 1024
_HEADER = struct.Struct(">I")

HELLO, HELLO_ACK, RUN, RELAY, RESULT = "HELLO", "HELLO_ACK", "RUN", "RELAY", "RESULT"
PING, PONG, SHUTDOWN = "PING", "PONG", "SHUTDOWN"
TYPES = frozenset({HELLO, HELLO_ACK, RUN, RELAY, RESULT, PING, PONG, SHUTDOWN})


class ChannelClosed(FutureError):
    """The peer went away (EOF, reset, broken pipe)."""

    def __init__(self, message="channel closed by peer"):
        super().__init__(message, retryable=True)


def message(type_, future_id=None, seq=0, payload=None) -> dict:
    return {"type": type_, "future_id": future_id, "seq": seq, "payload": payload or {}}


def encode_frame(msg: dict) -> bytes:
    body = json.dumps(msg, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    if len(body) > MAX_FRAME:
        raise ProtocolError(f"message of {len(body)} bytes exceeds frame limit")
    return _HEADER.pack(len(body)) + body


def decode_body(body: bytes) -> dict:
    try:
        msg = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as e:
        raise ProtocolError(f"undecodable frame: {e}") from None
    if not isinstance(msg, dict) or msg.get("type") not in TYPES:
        raise ProtocolError(f"unknown message {str(msg)[:80]!r}")
    if not isinstance(msg.get("payload", {}), dict):
        raise ProtocolError("payload must be an object")
    msg.setdefault("payload", {})
    return msg


class Channel:
    """Framed message stream over a byte transport."""

    def __init__(self):
        self._buf = bytearray()
        self.closed = False

    # transport hooks
    def fileno(self) -> int:
        raise NotImplementedError

    def _recv_some(self, n: int) -> bytes:
        raise NotImplementedError

    def _send_all(self, data: bytes) -> None:
        raise NotImplementedError

    def _close(self) -> None:
        raise NotImplementedError

    def send(self, msg: dict) -> None:
        if self.closed:
            raise ChannelClosed("channel already closed")
        data = encode_frame(msg)
        try:
            self._send_all(data)
        except OSError as e:
            self.closed = True
            raise ChannelClosed(f"send failed: {e}") from None

    def next_buffered(self) -> dict | None:
        """A complete message already buffered, if any."""
        if len(self._buf) < _HEADER.size:
            return None
        (length,) = _HEADER.unpack_from(self._buf)
        if length > MAX_FRAME:
            raise ProtocolError(f"frame length {length} exceeds limit")
        end = _HEADER.size + length
        if len(self._buf) < end:
            return None
        body = bytes(self._buf[_HEADER.size:end])
        del self._buf[:end]
        return decode_body(body)

    def fill(self) -> None:
        """Read whatever is available; call only when the fd is readable."""
        try:
            data = self._recv_some(65536)
        except OSError as e:
            self.closed = True
            raise ChannelClosed(f"receive failed: {e}") from None
        if not data:
            self.closed = True
            raise ChannelClosed()
        self._buf += data

    def wait_readable(self, timeout) -> bool:
        r, _, _ = select.select([self], [], [], timeout)
        return bool(r)

    def recv(self, timeout=None) -> dict:
        """Next message, blocking up to ``timeout`` seconds (None: forever)."""
        while True:
            msg = self.next_buffered()
            if msg is not None:
                return msg
            if self.closed:
                raise ChannelClosed()
            if not self.wait_readable(timeout):
                raise TimeoutError("no message within timeout")
            self.fill()

    def close(self) -> None:
        if not self.closed:
            self.closed = True
        try:
            self._close()
        except OSError:
            pass


class FdChannel(Channel):
    """Pipe pair (worker stdin/stdout)."""

    def __init__(self, rfd: int, wfd: int, owners=()):
        super().__init__()
        self.rfd, self.wfd = rfd, wfd
        self.owners = owners  # file objects that own the fds, closed instead

    def fileno(self):
        return self.rfd

    def _recv_some(self, n):
        return os.read(self.rfd, n)

    def _send_all(self, data):
        view = memoryview(data)
        while view:
            written = os.write(self.wfd, view)
            view = view[written:]

    def _close(self):
        if self.owners:
            for f in self.owners:
                f.close()
            return
        for fd in {self.rfd, self.wfd}:
            try:
                os.close(fd)
            except OSError:
                pass


class SocketChannel(Channel):
    def __init__(self, sock: socket.socket):
        super().__init__()
        self.sock = sock

    def fileno(self):
        return self.sock.fileno()

    def _recv_some(self, n):
        return self.sock.recv(n)

    def _send_all(self, data):
        self.sock.sendall(data)

    def _close(self):
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bad endpoint {text!r}; expected host:port")
    return host.strip("[]"), int(port)


# -- controller side ------------------------------------------------------

def handshake(chan: Channel, timeout=30.0) -> dict:
    """Send HELLO and wait for a matching HELLO_ACK; returns its payload."""
    chan.send(message(HELLO, payload={"protocol": PROTOCOL_VERSION}))
    try:
        reply = chan.recv(timeout)
    except TimeoutError:
        raise FutureError("worker did not answer the handshake in time") from None
    if reply["type"] != HELLO_ACK or reply["payload"].get("protocol") != PROTOCOL_VERSION:
        raise ProtocolError(f"bad handshake reply {reply!r}")
    return reply["payload"]


# -- worker side ----------------------------------------------------------

def serve_channel(chan: Channel) -> str:
    """Serve one controller until SHUTDOWN ("shutdown"), EOF ("eof") or a
    protocol violation ("violation")."""
    from .task import FutureOutcome, TaskSpec
    from .relay import capture_run

    try:
        hello = chan.recv()
        if hello["type"] != HELLO or hello["payload"].get("protocol") != PROTOCOL_VERSION:
            raise ProtocolError("expected HELLO")
        chan.send(message(HELLO_ACK, payload={"protocol": PROTOCOL_VERSION, "pid": os.getpid()}))
        while True:
            msg = chan.recv()
            kind = msg["type"]
            if kind == PING:
                chan.send(message(PONG, seq=msg.get("seq", 0)))
            elif kind == SHUTDOWN:
                return "shutdown"
            elif kind == RUN:
                future_id = msg.get("future_id")
                try:
                    task = TaskSpec.from_json(msg["payload"])
                except Exception as e:
                    raise ProtocolError(f"bad RUN payload: {e}") from None

                def push(record, _fid=future_id):
                    chan.send(message(RELAY, _fid, record.seq, record.to_wire()))

                outcome = capture_run(task, on_immediate=push)
                try:
                    payload = outcome.to_json()
                except NonExportableError as e:
                    payload = FutureOutcome.infra(e.message, retryable=False).to_json()
                chan.send(message(RESULT, future_id, len(outcome.relay), payload))
            else:
                raise ProtocolError(f"unexpected {kind} from controller")
    except ChannelClosed:
        return "eof"
    except (ProtocolError, KeyError, TypeError):
        return "violation"
    finally:
        chan.close()


def _become_worker():
    os.environ["FW_NESTED"] = "1"


def run_stdio_worker() -> None:
    """Serve the protocol over stdin/stdout, keeping fd 1 free of stray prints."""
    _become_worker()
    signal.signal(signal.SIGINT, signal.SIG_IGN)
    rfd, wfd = os.dup(0), os.dup(1)
    devnull = os.open(os.devnull, os.O_RDWR)
    os.dup2(devnull, 0)
    os.dup2(devnull, 1)
    os.close(devnull)
    serve_channel(FdChannel(rfd, wfd))


def run_connect_worker(endpoint: str) -> None:
    """Dial a controller and serve it."""
    _become_worker()
    sock = socket.create_connection(parse_endpoint(endpoint))
    serve_channel(SocketChannel(sock))


def serve_worker(listen: str, persist=False, announce=sys.stdout) -> None:
    """TCP worker daemon: one controller at a time.

    Returns after SHUTDOWN, or after the first controller disconnects unless
    ``persist`` is set.
    """
    _become_worker()
    host, port = parse_endpoint(listen)
    server = socket.create_server((host, port), family=socket.AF_INET6 if ":" in host else socket.AF_INET)
    try:
        bound = server.getsockname()
        if announce is not None:
            print(f"listening on {host}:{bound[1]}", file=announce, flush=True)
        while True:
            conn, _ = server.accept()
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            outcome = serve_channel(SocketChannel(conn))
            if outcome == "shutdown" or not persist:
                return
    finally:
        server.close()
