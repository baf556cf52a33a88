"""Local process pool: workers are this package re-executed in worker mode."""
from __future__ import annotations

import os
import subprocess
import sys
import weakref

from ..errors import FutureError
from ..protocol import FdChannel, handshake
from .remote import DEAD, ChannelBackend, WorkerConn
from .spi import ENV_NESTED, ENV_WORKERS, PROCESS_POOL

_SRC_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def worker_command() -> list[str]:
    return [sys.executable, "-m", "futurekit", "worker", "--stdio"]


def worker_environment() -> dict:
    env = dict(os.environ)
    env.pop(ENV_WORKERS, None)
    env[ENV_NESTED] = "1"
    path = env.get("PYTHONPATH")
    env["PYTHONPATH"] = _SRC_ROOT + (os.pathsep + path if path else "")
    return env


def _reap(workers):
    for w in workers:
        proc = w.process
        if proc is not None and proc.poll() is None:
            proc.kill()
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                pass


class ProcessPoolBackend(ChannelBackend):
    kind = PROCESS_POOL

    def __init__(self, workers):
        super().__init__(workers)
        # leftover workers are killed if the pool is garbage collected
        self._finalizer = weakref.finalize(self, _reap, list(workers))

    def pids(self) -> list[int]:
        return [w.pid for w in self.workers if w.state != DEAD]

    def shutdown(self) -> None:
        self._close_all(say_goodbye=True)
        for w in self.workers:
            proc = w.process
            if proc is None:
                continue
            try:
                proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait(timeout=5)
        self._finalizer.detach()


def start_pool(n: int, timeout: float = 60.0) -> ProcessPoolBackend:
    """Spawn ``n`` workers and handshake each of them."""
    if n < 1:
        raise ValueError("a pool needs at least one worker")
    stderr = None if os.environ.get("FUTUREKIT_DEBUG") else subprocess.DEVNULL
    env = worker_environment()
    workers = []
    try:
        for i in range(n):
            proc = subprocess.Popen(
                worker_command(),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=stderr,
                env=env,
                bufsize=0,
            )
            chan = FdChannel(proc.stdout.fileno(), proc.stdin.fileno(), owners=(proc.stdout, proc.stdin))
            workers.append(WorkerConn(chan, f"local#{i}", proc.pid, proc))
        for w in workers:
            handshake(w.channel, timeout)
    except (OSError, FutureError) as e:
        for w in workers:
            w.channel.close()
        _reap(workers)
        raise FutureError(f"could not start process pool: {e}") from None
    return ProcessPoolBackend(workers)
