"""The builtin function registry.

Builtins receive already-evaluated arguments; ``lookup``/``get`` also see the
caller's environment.  Arity is checked when the call is evaluated.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Callable

from ..errors import EvalError
from ..rng import RngState, normals_from_uniforms, next_uniform, RngCursor
from .values import (
    PROCESS_SESSION,
    Closure,
    Resource,
    Vec,
    check_int,
    encode_value,
    format_value,
    type_name,
)


@dataclass(frozen=True)
class Builtin:
    name: str
    fn: Callable
    min_args: int = 0
    max_args: int | None = None

    def __call__(self, ctx, env, args):
        n = len(args)
        if n < self.min_args or (self.max_args is not None and n > self.max_args):
            if self.max_args == self.min_args:
                want = str(self.min_args)
            elif self.max_args is None:
                want = f"at least {self.min_args}"
            else:
                want = f"{self.min_args} to {self.max_args}"
            raise EvalError(f"{self.name}: expected {want} argument(s), got {n}")
        return self.fn(ctx, env, *args)


REGISTRY: dict[str, Builtin] = {}


def builtin(name, min_args=0, max_args=None, aliases=()):
    def register(fn):
        for n in (name, *aliases):
            REGISTRY[n] = Builtin(n, fn, min_args, max_args)
        return fn
    return register


# -- numeric helpers ----------------------------------------------------------

def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _int_result(v: int) -> int:
    try:
        return check_int(v)
    except OverflowError:
        raise EvalError("integer overflow") from None


def _fdiv(a: float, b: float) -> float:
    if b == 0:
        if a == 0 or a != a:
            return math.nan
        sign = math.copysign(1.0, a) * math.copysign(1.0, b)
        return math.inf * sign
    return a / b


def _binop(op: str, a, b):
    if op == "/":
        return _fdiv(float(a), float(b))
    if isinstance(a, int) and isinstance(b, int):
        if op == "+":
            return _int_result(a + b)
        if op == "-":
            return _int_result(a - b)
        return _int_result(a * b)
    a, b = float(a), float(b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    return a * b


def _elementwise(op: str, a, b):
    """Scalar/Vec arithmetic with scalar broadcast."""
    for x in (a, b):
        if not (_is_num(x) or isinstance(x, Vec)):
            raise EvalError("non-numeric argument to binary operator")
    if isinstance(a, Vec) or isinstance(b, Vec):
        xs = a.items if isinstance(a, Vec) else None
        ys = b.items if isinstance(b, Vec) else None
        if xs is not None and ys is not None:
            if len(xs) != len(ys):
                raise EvalError("vector lengths differ")
            pairs = zip(xs, ys)
        elif xs is not None:
            pairs = ((x, b) for x in xs)
        else:
            pairs = ((a, y) for y in ys)
        out = [_binop(op, x, y) for x, y in pairs]
        if op == "/" or any(isinstance(v, float) for v in out):
            return Vec("real", tuple(float(v) for v in out))
        return Vec("int", tuple(out))
    return _binop(op, a, b)


@builtin("+")
def _add(ctx, env, *args):
    if not args:
        return 0
    acc = args[0]
    if len(args) == 1:
        return _elementwise("+", 0, acc)
    for x in args[1:]:
        acc = _elementwise("+", acc, x)
    return acc


@builtin("-", 1, 2)
def _sub(ctx, env, a, b=None):
    if b is None:
        return _elementwise("-", 0, a)
    return _elementwise("-", a, b)


@builtin("*")
def _mul(ctx, env, *args):
    acc = 1
    for x in args:
        acc = _elementwise("*", acc, x)
    return acc


@builtin("/", 2, 2)
def _div(ctx, env, a, b):
    return _elementwise("/", a, b)


def _int_pair(name, a, b):
    if not (isinstance(a, int) and isinstance(b, int)) or isinstance(a, bool) or isinstance(b, bool):
        raise EvalError(f"{name}: integer arguments required")
    if b == 0:
        raise EvalError(f"{name}: division by zero")


@builtin("mod", 2, 2)
def _mod(ctx, env, a, b):
    _int_pair("mod", a, b)
    return a % b


@builtin("idiv", 2, 2)
def _idiv(ctx, env, a, b):
    _int_pair("idiv", a, b)
    return _int_result(a // b)


def _math1(name, fn):
    def apply(ctx, env, x):
        def one(v):
            try:
                out = fn(float(v))
            except OverflowError:
                out = math.inf
            except ValueError:
                out = math.nan
            if out != out and v == v:
                ctx.capture.warning("NaNs produced")
            return out
        if isinstance(x, Vec):
            return Vec("real", tuple(one(v) for v in x.items))
        if not _is_num(x):
            raise EvalError("non-numeric argument to mathematical function")
        return one(x)
    REGISTRY[name] = Builtin(name, apply, 1, 1)


def _log(x):
    if x == 0:
        return -math.inf
    if x == math.inf:
        return math.inf
    return math.log(x)


_math1("log", _log)
_math1("exp", math.exp)
_math1("sqrt", math.sqrt)


@builtin("abs", 1, 1)
def _abs(ctx, env, x):
    if isinstance(x, Vec):
        return Vec(x.kind, tuple(abs(v) for v in x.items))
    if not _is_num(x):
        raise EvalError("non-numeric argument to mathematical function")
    return _int_result(abs(x)) if isinstance(x, int) else abs(x)


@builtin("floor", 1, 1)
def _floor(ctx, env, x):
    if not _is_num(x):
        raise EvalError("non-numeric argument to mathematical function")
    return float(math.floor(x)) if math.isfinite(x) else x


@builtin("round", 1, 2)
def _round(ctx, env, x, digits=0):
    if not _is_num(x) or not isinstance(digits, int):
        raise EvalError("non-numeric argument to mathematical function")
    return float(round(float(x), digits))


# -- comparison and logic ---------------------------------------------------

def _comparable(a, b):
    if _is_num(a) and _is_num(b):
        return
    if isinstance(a, str) and isinstance(b, str):
        return
    raise EvalError("comparison of incompatible types")


def _cmp(name, test):
    def apply(ctx, env, a, b):
        _comparable(a, b)
        return test(a, b)
    REGISTRY[name] = Builtin(name, apply, 2, 2)


_cmp("<", lambda a, b: a < b)
_cmp(">", lambda a, b: a > b)
_cmp("<=", lambda a, b: a <= b)
_cmp(">=", lambda a, b: a >= b)


def _equal(a, b) -> bool:
    if _is_num(a) and _is_num(b):
        return a == b
    try:
        return encode_value(a) == encode_value(b)
    except Exception:
        return a is b


@builtin("==", 2, 2)
def _eq(ctx, env, a, b):
    return _equal(a, b)


@builtin("!=", 2, 2)
def _ne(ctx, env, a, b):
    return not _equal(a, b)


@builtin("identical", 2, 2)
def _identical(ctx, env, a, b):
    try:
        return encode_value(a) == encode_value(b)
    except Exception:
        return a is b


def _need_bool(name, x):
    if not isinstance(x, bool):
        raise EvalError(f"{name}: invalid argument type")
    return x


@builtin("not", 1, 1)
def _not(ctx, env, x):
    return not _need_bool("not", x)


@builtin("and")
def _and(ctx, env, *xs):
    return all([_need_bool("and", x) for x in xs])


@builtin("or")
def _or(ctx, env, *xs):
    return any([_need_bool("or", x) for x in xs])


@builtin("is_null", 1, 1)
def _is_null(ctx, env, x):
    return x is None


@builtin("type_of", 1, 1)
def _type_of(ctx, env, x):
    return type_name(x)


# -- collections ------------------------------------------------------------

@builtin("vec")
def _vec(ctx, env, *xs):
    items = []
    for x in xs:
        if isinstance(x, Vec):
            items.extend(x.items)
        elif _is_num(x):
            items.append(x)
        else:
            raise EvalError("vec elements must be numeric")
    return Vec.of(items)


@builtin("list")
def _list(ctx, env, *xs):
    return list(xs)


@builtin("append", 2, 2)
def _append(ctx, env, xs, x):
    if not isinstance(xs, list):
        raise EvalError("append: first argument must be a list")
    return [*xs, x]


@builtin("length", 1, 1, aliases=("len",))
def _length(ctx, env, x):
    if isinstance(x, (Vec, list, str)):
        return len(x)
    if x is None:
        return 0
    return 1


@builtin("nth", 2, 2)
def _nth(ctx, env, xs, i):
    if not isinstance(xs, (Vec, list)):
        raise EvalError("nth: not a vector or list")
    if not isinstance(i, int) or isinstance(i, bool):
        raise EvalError("nth: index must be an integer")
    items = xs.items if isinstance(xs, Vec) else xs
    if not 0 <= i < len(items):
        raise EvalError("subscript out of bounds")
    return items[i]


def _elements(name, x):
    if isinstance(x, Vec):
        return list(x.items)
    if isinstance(x, list):
        return x
    if _is_num(x):
        return [x]
    raise EvalError(f"invalid 'type' ({type_name(x)}) of argument")


@builtin("sum", 1, 2)
def _sum(ctx, env, x, na_rm=False):
    total = 0
    for v in _elements("sum", x):
        if v is None:
            if na_rm is True:
                continue
            return None
        if not _is_num(v):
            raise EvalError(f"invalid 'type' ({type_name(v)}) of argument")
        if v != v and na_rm is True:
            continue
        total = _binop("+", total, v)
    return total


@builtin("mean", 1, 1)
def _mean(ctx, env, x):
    items = _elements("mean", x)
    if not items:
        return math.nan
    if any(v is None for v in items):
        return None
    total = _sum(ctx, env, x)
    return float(total) / len(items)


@builtin("any_na", 1, 1)
def _any_na(ctx, env, x):
    items = x.items if isinstance(x, Vec) else x if isinstance(x, list) else [x]
    return any(v is None or (isinstance(v, float) and v != v) for v in items)


@builtin("sort", 1, 1)
def _sort(ctx, env, x):
    if isinstance(x, Vec):
        return Vec(x.kind, tuple(sorted(x.items)))
    if isinstance(x, list):
        if all(_is_num(v) for v in x) or all(isinstance(v, str) for v in x):
            return sorted(x)
    raise EvalError("sort: only numeric or string sequences can be sorted")


@builtin("seq", 2, 3)
def _seq(ctx, env, a, b, by=None):
    if not (_is_num(a) and _is_num(b)) or (by is not None and not _is_num(by)):
        raise EvalError("seq: numeric arguments required")
    if by is None:
        by = 1 if b >= a else -1
    if by == 0 or (b - a) * by < 0:
        raise EvalError("seq: wrong sign in 'by' argument")
    n = int(math.floor((b - a) / by + 1e-10)) + 1
    if n > 10_000_000:
        raise EvalError("seq: result would be too long")
    if all(isinstance(v, int) for v in (a, b, by)):
        return Vec("int", tuple(a + i * by for i in range(n)))
    return Vec("real", tuple(float(a + i * by) for i in range(n)))


@builtin("map", 2, 2, aliases=("lapply",))
def _map(ctx, env, xs, fn):
    from .evaluator import call_closure
    if not isinstance(fn, Closure):
        raise EvalError("map: second argument must be a function")
    return [call_closure(fn, [x], ctx) for x in _elements("map", xs)]


@builtin("map_elements", 3, 3)
def _map_elements(ctx, env, fn, xs, streams):
    """Apply ``fn`` per element, each under its own RNG stream if given."""
    from .evaluator import call_closure
    if not isinstance(fn, Closure):
        raise EvalError("map_elements: first argument must be a function")
    items = _elements("map_elements", xs)
    if streams is None:
        return [call_closure(fn, [x], ctx) for x in items]
    if not isinstance(streams, list) or len(streams) != len(items):
        raise EvalError("map_elements: one stream per element required")
    out = []
    saved = ctx.rng
    try:
        for x, words in zip(items, streams):
            cursor = RngCursor(RngState.from_words(words.items))
            ctx.rng = cursor
            out.append(call_closure(fn, [x], ctx))
            if cursor.used and saved is not None:
                saved.used = True
    finally:
        ctx.rng = saved
    return out


# -- strings and output -----------------------------------------------------

def _paste(args) -> str:
    return "".join(format_value(a) for a in args)


@builtin("paste")
def _paste_fn(ctx, env, *args):
    return _paste(args)


@builtin("str", 1, 1)
def _str(ctx, env, x):
    return format_value(x)


@builtin("print", 1, 1)
def _print(ctx, env, x):
    ctx.emit_stdout(format_value(x) + "\n")
    return x


@builtin("message")
def _message(ctx, env, *args):
    ctx.capture.message(_paste(args))
    return None


@builtin("warning")
def _warning(ctx, env, *args):
    ctx.capture.warning(_paste(args))
    return None


@builtin("progress", 1, 2)
def _progress(ctx, env, text, data=None):
    ctx.capture.immediate(format_value(text), "progress", data)
    return None


@builtin("write_stderr")
def _write_stderr(ctx, env, *args):
    ctx.capture.stderr(_paste(args))
    return None


@builtin("error")
def _error(ctx, env, *args):
    raise EvalError(_paste(args))


# -- environment ------------------------------------------------------------

@builtin("lookup", 1, 1, aliases=("get",))
def _lookup(ctx, env, name):
    if not isinstance(name, str):
        raise EvalError("invalid first argument")
    scope = env.find(name)
    if scope is None:
        raise EvalError(f"object '{name}' not found")
    return scope.bindings[name]


# -- random numbers ---------------------------------------------------------

def _count(name, n):
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise EvalError(f"{name}: invalid arguments")
    return n


@builtin("runif", 1, 3)
def _runif(ctx, env, n, lo=0.0, hi=1.0):
    cursor = ctx.cursor()
    lo, hi = float(lo), float(hi)
    return Vec("real", tuple(lo + (hi - lo) * next_uniform(cursor) for _ in range(_count("runif", n))))


@builtin("rnorm", 1, 3)
def _rnorm(ctx, env, n, mean=0.0, sd=1.0):
    zs = normals_from_uniforms(ctx.cursor(), _count("rnorm", n))
    if mean == 0 and sd == 1:
        return Vec("real", tuple(zs))
    return Vec("real", tuple(float(mean) + float(sd) * z for z in zs))


# -- resources --------------------------------------------------------------

@builtin("make_resource", 1, 1)
def _make_resource(ctx, env, tag):
    return Resource(format_value(tag))


@builtin("resource_info", 1, 1)
def _resource_info(ctx, env, r):
    if not isinstance(r, Resource):
        raise EvalError("not a resource")
    if r.session != PROCESS_SESSION:
        raise EvalError("invalid connection")
    return r.tag


# -- time, processes, latches -----------------------------------------------

@builtin("sleep_ms", 1, 1)
def _sleep_ms(ctx, env, ms):
    if not _is_num(ms) or ms < 0:
        raise EvalError("sleep_ms: invalid duration")
    time.sleep(ms / 1000.0)
    return None


@builtin("now_ms", 0, 0)
def _now_ms(ctx, env):
    return time.time_ns() // 1_000_000


@builtin("pid", 0, 0)
def _pid(ctx, env):
    return os.getpid()


@builtin("touch", 1, 1)
def _touch(ctx, env, path):
    if not isinstance(path, str):
        raise EvalError("touch: path must be a string")
    with open(path, "a"):
        pass
    return None


@builtin("wait_file", 1, 2)
def _wait_file(ctx, env, path, timeout_ms=60_000):
    if not isinstance(path, str):
        raise EvalError("wait_file: path must be a string")
    deadline = time.monotonic() + timeout_ms / 1000.0
    while not os.path.exists(path):
        if time.monotonic() > deadline:
            raise EvalError(f"latch {path} not released in time")
        time.sleep(0.005)
    return True


# -- nested futures ---------------------------------------------------------

@builtin("available_workers", 0, 0)
def _available_workers(ctx, env):
    from ..backends.spi import available_workers
    return available_workers()


@builtin("nworkers", 0, 0)
def _nworkers(ctx, env):
    return ctx.session().capacity()


@builtin("future_map", 2, 3)
def _future_map(ctx, env, xs, fn, seed=False):
    from ..mapreduce import future_map
    if not isinstance(fn, Closure):
        raise EvalError("future_map: second argument must be a function")
    return future_map(_elements("future_map", xs), fn, seed=_need_bool("future_map", seed),
                      session=ctx.session())
