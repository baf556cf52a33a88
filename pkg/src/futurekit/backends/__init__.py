"""Execution backends and the contract they share."""
from .spi import (
    PROCESS_POOL,
    SEQUENTIAL,
    TCP_CLUSTER,
    Backend,
    BackendSpec,
    Plan,
    PollResult,
    available_workers,
    make_backend,
    register_backend,
)
