"""Tree-walking evaluator."""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

from ..errors import EvalError
from ..rng import RngCursor, base_state
from .analysis import free_vars
from .syntax import Assign, Begin, Call, Expr, If, Lambda, Let, Literal, Var
from .values import Closure, Env, to_value


class _ConsoleCapture:
    """Fallback sink when evaluating outside a future."""

    def stdout(self, text):
        sys.stdout.write(text)

    def message(self, text):
        sys.stderr.write(text + "\n")

    def warning(self, text):
        sys.stderr.write(f"Warning message:\n{text}\n")

    def immediate(self, text, cls, data):
        sys.stderr.write(text + "\n")

    def stderr(self, text):
        sys.stderr.write(text)


@dataclass
class EvalContext:
    """Everything evaluation may touch besides the environment."""

    registry: dict
    capture: object = field(default_factory=_ConsoleCapture)
    rng: RngCursor | None = None
    session: Callable | None = None  # returns the Session nested futures use
    stdout_capture: bool = True
    scratch_rng: RngCursor | None = None

    @property
    def names(self) -> frozenset:
        return frozenset(self.registry)

    def cursor(self) -> RngCursor:
        if self.rng is not None:
            return self.rng
        # unseeded draws come from a throwaway stream; they are flagged, not refused
        if self.scratch_rng is None:
            self.scratch_rng = RngCursor(base_state(int.from_bytes(os.urandom(8), "big")))
        return self.scratch_rng

    @property
    def rng_used(self) -> bool:
        return bool((self.rng and self.rng.used) or (self.scratch_rng and self.scratch_rng.used))

    def emit_stdout(self, text):
        if self.stdout_capture:
            self.capture.stdout(text)


@lru_cache(maxsize=4096)
def _lambda_free_vars(expr: Lambda, registry: frozenset) -> tuple:
    return tuple(free_vars(expr, registry))


def make_closure(expr: Lambda, env: Env, registry) -> Closure:
    captured = {}
    for name in _lambda_free_vars(expr, frozenset(registry)):
        scope = env.find(name)
        if scope is not None:
            captured[name] = scope.bindings[name]
    return Closure(expr.params, expr.body, captured)


def call_closure(fn: Closure, args: list, ctx: EvalContext):
    if len(args) != len(fn.params):
        raise EvalError(
            f"closure expects {len(fn.params)} argument(s), got {len(args)}"
        )
    frame = Env(dict(zip(fn.params, args)), Env(fn.env))
    return eval_expr(fn.body, frame, ctx)


def _truthy(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        if v != v:
            raise EvalError("missing value where TRUE/FALSE needed")
        return v != 0
    if v is None:
        raise EvalError("argument is of length zero")
    raise EvalError("argument is not interpretable as logical")


def eval_expr(expr: Expr, env: Env, ctx: EvalContext):
    t = type(expr)
    if t is Literal:
        return expr.value
    if t is Var:
        scope = env.find(expr.name)
        if scope is None:
            raise EvalError(f"object '{expr.name}' not found")
        return scope.bindings[expr.name]
    if t is Call:
        scope = env.find(expr.fn)
        target = scope.bindings[expr.fn] if scope is not None else None
        args = [eval_expr(a, env, ctx) for a in expr.args]
        if isinstance(target, Closure):
            return call_closure(target, args, ctx)
        builtin = ctx.registry.get(expr.fn)
        if builtin is None:
            if scope is not None:
                raise EvalError(f"attempt to apply non-function '{expr.fn}'")
            raise EvalError(f'could not find function "{expr.fn}"')
        return builtin(ctx, env, args)
    if t is Let:
        frame = env.child()
        for name, value in expr.bindings:
            frame.bindings[name] = eval_expr(value, frame, ctx)
        return eval_expr(expr.body, frame, ctx)
    if t is Lambda:
        return make_closure(expr, env, ctx.registry)
    if t is If:
        if _truthy(eval_expr(expr.cond, env, ctx)):
            return eval_expr(expr.then, env, ctx)
        return eval_expr(expr.else_, env, ctx)
    if t is Begin:
        result = None
        for step in expr.steps:
            result = eval_expr(step, env, ctx)
        return result
    if t is Assign:
        value = eval_expr(expr.value, env, ctx)
        env.assign(expr.name, value)
        return value
    raise TypeError(f"not an expression: {expr!r}")


def evaluate(expr: Expr, env=None, ctx: EvalContext | None = None):
    """Evaluate ``expr`` in a fresh task frame on top of ``env``.

    ``env`` may be an :class:`Env` or a plain mapping of globals.
    """
    if ctx is None:
        from .builtins import REGISTRY
        ctx = EvalContext(REGISTRY)
    if env is None:
        env = Env()
    elif not isinstance(env, Env):
        env = Env({k: to_value(v) for k, v in env.items()})
    try:
        return eval_expr(expr, env.child(), ctx)
    except RecursionError:
        raise EvalError("evaluation nested too deeply") from None
