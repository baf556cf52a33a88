import socket
import struct
import threading

import pytest

from futurekit.errors import ProtocolError
from futurekit.exprlang import parse
from futurekit.protocol import (
    HELLO, MAX_FRAME, PING, RELAY, RESULT, RUN, SHUTDOWN, ChannelClosed, SocketChannel,
    decode_body, encode_frame, handshake, message, parse_endpoint, serve_channel,
)
from futurekit.task import FutureOutcome, TaskSpec


@pytest.fixture
def pair():
    a, b = socket.socketpair()
    ctrl, work = SocketChannel(a), SocketChannel(b)
    result = {}
    t = threading.Thread(target=lambda: result.setdefault("end", serve_channel(work)), daemon=True)
    t.start()
    yield ctrl, result, t
    ctrl.close()
    t.join(timeout=10)


def test_frame_layout():
    frame = encode_frame(message(PING, seq=7))
    (n,) = struct.unpack(">I", frame[:4])
    assert n == len(frame) - 4
    assert decode_body(frame[4:]) == {"type": "PING", "future_id": None, "seq": 7, "payload": {}}


@pytest.mark.parametrize("body", [b"\xff", b"[]", b'{"type":"NOPE"}', b'{"type":"PING","payload":3}'])
def test_bad_bodies(body):
    with pytest.raises(ProtocolError):
        decode_body(body)


def test_oversized_frame_rejected():
    a, b = socket.socketpair()
    chan = SocketChannel(b)
    a.sendall(struct.pack(">I", MAX_FRAME + 1))
    chan.fill()
    with pytest.raises(ProtocolError):
        chan.next_buffered()
    a.close()
    chan.close()


def test_run_relay_result_sequence(pair):
    ctrl, result, t = pair
    ack = handshake(ctrl)
    assert ack["protocol"] == 1 and "pid" in ack
    task = TaskSpec("f1", parse('(begin (progress "p") (print "o") (+ x 1))'), {"x": 41})
    ctrl.send(message(RUN, "f1", 0, task.to_json()))
    relay = ctrl.recv(10)
    assert relay["type"] == RELAY and relay["future_id"] == "f1" and relay["payload"]["payload"] == "p"
    done = ctrl.recv(10)
    assert done["type"] == RESULT
    out = FutureOutcome.from_json(done["payload"])
    assert out.value == 42 and [r.kind for r in out.relay] == ["immediate", "stdout"]
    ctrl.send(message(PING, seq=3))
    assert ctrl.recv(10)["type"] == "PONG"
    ctrl.send(message(SHUTDOWN))
    t.join(timeout=10)
    assert result["end"] == "shutdown"


def test_resource_result_becomes_infra_failure(pair):
    ctrl, _, _ = pair
    handshake(ctrl)
    task = TaskSpec("f2", parse('(make_resource "db")'), {})
    ctrl.send(message(RUN, "f2", 0, task.to_json()))
    out = FutureOutcome.from_json(ctrl.recv(10)["payload"])
    assert out.kind == "infra_failure" and not out.retryable


def test_protocol_violation_ends_session(pair):
    ctrl, result, t = pair
    handshake(ctrl)
    ctrl.send(message(HELLO))
    t.join(timeout=10)
    assert result["end"] == "violation"
    with pytest.raises(ChannelClosed):
        ctrl.recv(5)


def test_eof_ends_session(pair):
    ctrl, result, t = pair
    handshake(ctrl)
    ctrl.close()
    t.join(timeout=10)
    assert result["end"] == "eof"


def test_parse_endpoint():
    assert parse_endpoint("127.0.0.1:9000") == ("127.0.0.1", 9000)
    assert parse_endpoint("[::1]:80") == ("::1", 80)
    with pytest.raises(ValueError):
        parse_endpoint("nohost")
