"""The backend contract, plan descriptions and worker-count resolution."""
from __future__ import annotations

import abc
import contextlib
import contextvars
import os
from dataclasses import dataclass, field

SEQUENTIAL, PROCESS_POOL, TCP_CLUSTER = "sequential", "process_pool", "tcp_cluster"
_ALIASES = {"multisession": PROCESS_POOL, "cluster": TCP_CLUSTER, "pool": PROCESS_POOL}

ENV_WORKERS = "FW_WORKERS"
ENV_NESTED = "FW_NESTED"

# >0 while a task body is being evaluated in this process
_nesting = contextvars.ContextVar("futurekit_nesting", default=0)


@contextlib.contextmanager
def nesting():
    token = _nesting.set(_nesting.get() + 1)
    try:
        yield
    finally:
        _nesting.reset(token)


def in_worker() -> bool:
    return _nesting.get() > 0 or os.environ.get(ENV_NESTED) == "1"


def _cpu_count() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except (AttributeError, OSError):
        return os.cpu_count() or 1


def available_workers(workers=None) -> int:
    """Resolve a worker count; first match wins.

    explicit ``workers`` > ``FW_WORKERS`` > ``FW_NESTED=1`` (forces 1) >
    detected CPU count, never below 1.  Inside a task evaluated in this
    process, the controller's ``FW_WORKERS`` is ignored just as it is for a
    spawned worker, whose environment never carries it.
    """
    if workers is not None and workers != "auto":
        return max(1, int(workers))
    nested_here = _nesting.get() > 0
    env_workers = os.environ.get(ENV_WORKERS)
    if env_workers and not nested_here:
        try:
            return max(1, int(env_workers))
        except ValueError:
            pass
    if in_worker():
        return 1
    return max(1, _cpu_count())


@dataclass(frozen=True)
class BackendSpec:
    kind: str
    workers: int | str = "auto"
    endpoints: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (SEQUENTIAL, PROCESS_POOL, TCP_CLUSTER) and self.kind not in _FACTORIES:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if (self.kind == TCP_CLUSTER) != bool(self.endpoints):
            raise ValueError("endpoints are required for, and only for, tcp_cluster")
        if self.workers != "auto" and (not isinstance(self.workers, int) or self.workers < 1):
            raise ValueError(f"workers must be a positive integer or 'auto', not {self.workers!r}")

    @classmethod
    def parse(cls, text: str) -> BackendSpec:
        text = text.strip()
        kind, _, rest = text.partition(":")
        kind = _ALIASES.get(kind, kind)
        if kind == TCP_CLUSTER:
            endpoints = tuple(e.strip() for e in rest.split(",") if e.strip())
            for e in endpoints:
                host, _, port = e.rpartition(":")
                if not host or not port.isdigit():
                    raise ValueError(f"bad endpoint {e!r}; expected host:port")
            return cls(kind, len(endpoints) or "auto", endpoints)
        if kind == SEQUENTIAL:
            if rest and rest != "1":
                raise ValueError("sequential has exactly one worker")
            return cls(kind, 1)
        if not rest or rest == "auto":
            return cls(kind, "auto")
        try:
            return cls(kind, int(rest))
        except ValueError:
            raise ValueError(f"bad worker count in {text!r}") from None

    def __str__(self):
        if self.kind == SEQUENTIAL:
            return SEQUENTIAL
        if self.kind == TCP_CLUSTER:
            return f"{TCP_CLUSTER}:{','.join(self.endpoints)}"
        return f"{self.kind}:{self.workers}"

    def resolved(self) -> BackendSpec:
        if self.kind == SEQUENTIAL:
            return self
        if self.kind == TCP_CLUSTER:
            return BackendSpec(self.kind, len(self.endpoints), self.endpoints)
        return BackendSpec(self.kind, available_workers(self.workers), self.endpoints)


@dataclass(frozen=True)
class Plan:
    """Backend per nesting depth; depths past the end run sequentially."""

    layers: list = field(default_factory=lambda: [BackendSpec(SEQUENTIAL, 1)])

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a plan needs at least one layer")
        object.__setattr__(self, "layers", [
            BackendSpec.parse(s) if isinstance(s, str) else s for s in self.layers
        ])

    @classmethod
    def parse(cls, text: str) -> Plan:
        return cls([BackendSpec.parse(p) for p in text.split("/") if p.strip()])

    @classmethod
    def coerce(cls, plan) -> Plan:
        if plan is None:
            return cls()
        if isinstance(plan, Plan):
            return plan
        if isinstance(plan, BackendSpec):
            return cls([plan])
        if isinstance(plan, str):
            return cls.parse(plan)
        return cls(list(plan))

    @property
    def head(self) -> BackendSpec:
        return self.layers[0]

    @property
    def tail(self) -> tuple[BackendSpec, ...]:
        return tuple(self.layers[1:])

    def __str__(self):
        return "/".join(map(str, self.layers))


@dataclass
class PollResult:
    done: bool
    immediate: list = field(default_factory=list)


class Backend(abc.ABC):
    """What every execution backend implements.

    ``launch`` blocks while every slot is busy; ``poll`` never blocks;
    ``collect`` blocks until the task is done.  Infrastructure failures raise
    :class:`~futurekit.errors.FutureError`.
    """

    kind = "abstract"

    @abc.abstractmethod
    def launch(self, task):
        """Start ``task``; returns an opaque ticket."""

    @abc.abstractmethod
    def poll(self, ticket) -> PollResult:
        ...

    @abc.abstractmethod
    def collect(self, ticket):
        """Block until done and return the FutureOutcome."""

    @abc.abstractmethod
    def capacity(self) -> int:
        ...

    def discard(self, ticket) -> None:
        """Forget ``ticket``; its result is dropped when it arrives."""

    def shutdown(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


_FACTORIES: dict = {}


def register_backend(kind: str, factory) -> None:
    """Make ``factory(spec) -> Backend`` available under ``kind``."""
    _FACTORIES[kind] = factory


def make_backend(spec: BackendSpec) -> Backend:
    spec = spec.resolved()
    if spec.kind in _FACTORIES:
        return _FACTORIES[spec.kind](spec)
    if spec.kind == SEQUENTIAL:
        from .sequential import SequentialBackend
        return SequentialBackend()
    if spec.kind == PROCESS_POOL:
        from .pool import start_pool
        return start_pool(spec.workers)
    from .cluster import connect_cluster
    return connect_cluster(spec.endpoints)
