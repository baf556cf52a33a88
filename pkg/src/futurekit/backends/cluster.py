"""Backend over remote worker daemons reached by TCP."""
from __future__ import annotations

import socket
import warnings

from ..errors import FutureError
from ..protocol import SocketChannel, handshake, parse_endpoint
from .remote import ChannelBackend, WorkerConn
from .spi import TCP_CLUSTER


class ClusterWarning(UserWarning):
    pass


class ClusterBackend(ChannelBackend):
    kind = TCP_CLUSTER

    def __init__(self, workers, shutdown_remote=False):
        super().__init__(workers)
        self.shutdown_remote = shutdown_remote

    def shutdown(self) -> None:
        # daemons outlive the controller unless asked to stop
        self._close_all(say_goodbye=self.shutdown_remote)


def connect_cluster(endpoints, timeout: float = 10.0, shutdown_remote=False) -> ClusterBackend:
    """Connect and handshake each ``host:port``; unreachable ones are skipped
    with a :class:`ClusterWarning`."""
    workers = []
    for endpoint in endpoints:
        try:
            sock = socket.create_connection(parse_endpoint(endpoint), timeout=timeout)
            sock.settimeout(None)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            chan = SocketChannel(sock)
            try:
                ack = handshake(chan, timeout)
            except Exception:
                chan.close()
                raise
        except (OSError, FutureError, ValueError) as e:
            warnings.warn(f"worker {endpoint} unavailable: {e}", ClusterWarning, stacklevel=2)
            continue
        workers.append(WorkerConn(chan, endpoint, ack.get("pid")))
    if not workers:
        raise FutureError(f"none of the {len(endpoints)} cluster endpoints could be reached")
    return ClusterBackend(workers, shutdown_remote)
