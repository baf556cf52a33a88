"""futurekit: futures for parallel and distributed evaluation.

Three primitives make up the core: :func:`future` creates a future,
:func:`value` collects its value (relaying output and conditions), and
:func:`resolved` polls without blocking.  Where the work runs is chosen by
the plan, a stack of backends with one layer per nesting depth.
"""
from .backends.spi import BackendSpec, Plan, available_workers
from .core import Future, Session, current_session, future, plan, resolved, try_value, value
from .errors import EvalError, FutureError, MissingGlobalError, NonExportableError, RngMisuseError
from .mapreduce import future_either, future_map, value_all
from .relay import RecordingSinks, RelayRecord
from .task import FutureOutcome, TaskSpec

__version__ = "0.1.0"

__all__ = [
    "BackendSpec", "Plan", "available_workers",
    "Future", "Session", "current_session", "future", "plan", "resolved", "try_value", "value",
    "EvalError", "FutureError", "MissingGlobalError", "NonExportableError", "RngMisuseError",
    "future_either", "future_map", "value_all",
    "RecordingSinks", "RelayRecord", "FutureOutcome", "TaskSpec",
]
