"""What a conformance program sees: a session plus a fingerprint recorder."""
from __future__ import annotations

import os
import threading
import time

from ..core import Session
from ..errors import EvalError, FutureError
from ..exprlang import encode_value
from ..relay import RecordingSinks

CONFORMANCE_SEED = 20_240_611


def error_entry(exc: Exception) -> dict:
    entry = {"error": type(exc).__name__, "message": getattr(exc, "message", str(exc))}
    if isinstance(exc, EvalError):
        entry["class"] = exc.condition_class
    return entry


class Harness:
    """Runs one check program against one backend.

    Every observation goes through :meth:`record` so the final fingerprint
    holds the steps in program order plus the full relay event stream.
    Paths handed out by :meth:`path` live in a private directory and must
    never be recorded, since they differ between runs.
    """

    def __init__(self, open_session, tmpdir: str):
        self._open_session = open_session
        self.tmpdir = tmpdir
        self.sinks = RecordingSinks()
        self.steps: list = []
        self._sessions: list[Session] = []
        self._latches: list[str] = []
        self._threads: list[threading.Thread] = []
        self.session = None
        self.new_session()

    # -- sessions -----------------------------------------------------------

    def new_session(self, **opts) -> Session:
        """A fresh session on the same backend description, sharing the sinks.

        Cluster daemons admit one controller at a time, so earlier sessions
        are shut down first and :attr:`session` moves to the new one.
        """
        opts.setdefault("seed", CONFORMANCE_SEED)
        for s in self._sessions:
            s.shutdown()
        self.session = self._open_session(sinks=self.sinks, **opts)
        self._sessions.append(self.session)
        return self.session

    def close(self) -> None:
        for path in self._latches:
            self.release(path)
        for t in self._threads:
            t.join(timeout=30)
        for s in reversed(self._sessions):
            s.shutdown()

    # -- files and latches --------------------------------------------------

    def path(self, name: str) -> str:
        return os.path.join(self.tmpdir, name)

    def latch(self, name: str) -> str:
        """A file path tasks can ``wait_file`` on; released at cleanup at the latest."""
        p = self.path(name)
        self._latches.append(p)
        return p

    @staticmethod
    def release(path: str) -> None:
        with open(path, "a"):
            pass

    def background(self, fn) -> threading.Thread:
        t = threading.Thread(target=fn, daemon=True)
        self._threads.append(t)
        t.start()
        return t

    @staticmethod
    def wait_for(path: str, timeout=60.0) -> bool:
        deadline = time.monotonic() + timeout
        while not os.path.exists(path):
            if time.monotonic() > deadline:
                return False
            time.sleep(0.002)
        return True

    # -- recording ----------------------------------------------------------

    def record(self, label: str, obj) -> None:
        self.steps.append([label, obj])

    def record_value(self, label: str, v) -> None:
        self.record(label, {"value": encode_value(v)})

    def attempt(self, label: str, thunk):
        """Run ``thunk``; record its value or its error.  Returns the value or None."""
        try:
            v = thunk()
        except (EvalError, FutureError) as e:
            self.record(label, error_entry(e))
            return None
        self.record_value(label, v)
        return v

    def future(self, body, env=None, session=None, **opts):
        return (session or self.session).future(body, env, **opts)

    def value(self, label: str, f, session=None):
        return self.attempt(label, lambda: (session or self.session).value(f))

    def run(self, label: str, body, env=None, session=None, **opts):
        """Create a future and collect its value as one recorded step."""
        s = session or self.session
        return self.attempt(label, lambda: s.value(s.future(body, env, **opts)))

    def fingerprint(self) -> dict:
        return {
            "steps": self.steps,
            "relay": [list(e) for e in self.sinks.events],
        }
