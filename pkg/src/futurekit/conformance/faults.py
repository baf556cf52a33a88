"""Deliberately broken backends, for checking that the suite notices."""
from __future__ import annotations

from ..backends.spi import Backend, BackendSpec, make_backend
from ..relay import WARNING


class DropWarnings(Backend):
    """Wraps a real backend and silently loses every warning record."""

    kind = "drop_warnings"

    def __init__(self, inner: Backend):
        self.inner = inner

    def launch(self, task):
        return self.inner.launch(task)

    def poll(self, ticket):
        return self.inner.poll(ticket)

    def collect(self, ticket):
        outcome = self.inner.collect(ticket)
        outcome.relay = [r for r in outcome.relay if r.kind != WARNING]
        return outcome

    def capacity(self):
        return self.inner.capacity()

    def discard(self, ticket):
        self.inner.discard(ticket)

    def shutdown(self):
        self.inner.shutdown()


def dropping_warnings(spec="sequential"):
    """Factory for :func:`~futurekit.conformance.run_conformance`."""
    def factory():
        return DropWarnings(make_backend(BackendSpec.parse(spec)))
    factory.label = f"drop_warnings({spec})"
    return factory
