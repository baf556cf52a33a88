"""The task expression language: reader, globals analysis, evaluator."""
from .analysis import free_vars, uses_dynamic_lookup
from .builtins import REGISTRY, Builtin
from .evaluator import EvalContext, call_closure, eval_expr, evaluate, make_closure
from .syntax import (
    Assign,
    Begin,
    Call,
    Expr,
    If,
    Lambda,
    Let,
    Literal,
    ParseError,
    Var,
    is_identifier,
    parse,
    unparse,
)
from .values import (
    Closure,
    Env,
    Resource,
    Vec,
    decode_env,
    decode_value,
    encode_env,
    encode_value,
    format_value,
    parse_value_literal,
    to_value,
)

BUILTIN_NAMES = frozenset(REGISTRY)


def closure(source: str, env=None) -> Closure:
    """Build a closure from ``(lambda ...)`` source, capturing from ``env``."""
    expr = parse(source)
    if not isinstance(expr, Lambda):
        raise ValueError("closure source must be a lambda expression")
    if env is not None and not isinstance(env, Env):
        env = Env({k: to_value(v) for k, v in env.items()})
    return make_closure(expr, env or Env(), REGISTRY)
