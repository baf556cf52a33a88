"""Static discovery of the globals a task expression needs.

The walk is depth-first, left to right.  It is optimistic in the sense of
preferring false positives: a name assigned in only one branch of an ``if``
is still reported when referenced afterwards.  Names reached only through
``lookup``/``get`` are invisible to it.
"""
from __future__ import annotations

from .syntax import Assign, Begin, Call, Expr, If, Lambda, Let, Literal, Var


def free_vars(expr: Expr, registry=frozenset()) -> list[str]:
    """Names referenced but not bound, in first-reference order."""
    found: dict[str, None] = {}

    def ref(name, bound):
        if name not in bound:
            found.setdefault(name, None)

    # ``bound`` is the scope's mutable set; sequential constructs share it so
    # that an unconditional set! binds everything evaluated after it.
    def walk(e, bound):
        if isinstance(e, Literal):
            return
        if isinstance(e, Var):
            ref(e.name, bound)
        elif isinstance(e, Call):
            if e.fn not in bound and e.fn not in registry:
                found.setdefault(e.fn, None)
            for a in e.args:
                walk(a, bound)
        elif isinstance(e, Let):
            inner = set(bound)
            for name, value in e.bindings:
                walk(value, inner)
                inner.add(name)
            walk(e.body, inner)
        elif isinstance(e, Lambda):
            walk(e.body, set(bound) | set(e.params))
        elif isinstance(e, If):
            walk(e.cond, bound)
            walk(e.then, set(bound))
            walk(e.else_, set(bound))
        elif isinstance(e, Begin):
            for step in e.steps:
                walk(step, bound)
        elif isinstance(e, Assign):
            walk(e.value, bound)
            bound.add(e.name)
        else:
            raise TypeError(f"not an expression: {e!r}")

    walk(expr, set())
    return list(found)


def uses_dynamic_lookup(expr: Expr) -> bool:
    """True if ``expr`` calls ``lookup`` or ``get`` anywhere."""
    if isinstance(expr, Call):
        return expr.fn in ("lookup", "get") or any(map(uses_dynamic_lookup, expr.args))
    if isinstance(expr, Let):
        return any(uses_dynamic_lookup(v) for _, v in expr.bindings) or uses_dynamic_lookup(expr.body)
    if isinstance(expr, Lambda):
        return uses_dynamic_lookup(expr.body)
    if isinstance(expr, If):
        return any(map(uses_dynamic_lookup, (expr.cond, expr.then, expr.else_)))
    if isinstance(expr, Begin):
        return any(map(uses_dynamic_lookup, expr.steps))
    if isinstance(expr, Assign):
        return uses_dynamic_lookup(expr.value)
    return False
