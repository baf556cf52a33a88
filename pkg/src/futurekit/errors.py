"""Exception taxonomy.

Two kinds of failure reach the caller of ``value()``: an :class:`EvalError`
raised by the task expression itself (relayed unchanged from the worker),
and a :class:`FutureError` for infrastructure problems such as a dead worker
or a broken channel.
"""


class EvalError(Exception):
    """An error signaled while evaluating a task expression."""

    def __init__(self, message, condition_class="error"):
        super().__init__(message)
        self.message = message
        self.condition_class = condition_class


class MissingGlobalError(EvalError):
    """A free variable of the task is not bound in the creation environment."""

    def __init__(self, name):
        super().__init__(f"object '{name}' not found", "MissingGlobalError")
        self.name = name


class FutureError(Exception):
    """Infrastructure failure: lost worker, failed communication, no capacity."""

    def __init__(self, message, retryable=False):
        super().__init__(message)
        self.message = message
        self.retryable = retryable


class NonExportableError(FutureError):
    """A captured value is bound to the session that created it."""

    def __init__(self, name, value):
        super().__init__(
            f"global '{name}' holds a non-exportable object "
            f"(resource '{getattr(value, 'tag', type(value).__name__)}') "
            "that cannot be sent to another process"
        )
        self.name = name


class RngMisuseError(FutureError):
    """A future drew random numbers without requesting a parallel RNG stream."""


class ProtocolError(FutureError):
    """Malformed or unexpected message on a worker channel."""
