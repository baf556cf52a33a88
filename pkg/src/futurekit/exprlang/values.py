"""Runtime values, environments and their tagged-JSON encoding.

Values map onto Python objects: ``None``, ``bool``, ``int`` (64-bit range),
``float``, ``str``, :class:`Vec`, ``list`` (heterogeneous List),
:class:`Closure` and :class:`Resource`.
"""
from __future__ import annotations

import math
import struct
import uuid
from dataclasses import dataclass, field

from ..errors import NonExportableError
from .syntax import INT_MAX, INT_MIN, Expr, parse, unparse

# Identity of this interpreter process; resources remember where they were made.
PROCESS_SESSION = str(uuid.uuid4())


@dataclass(frozen=True)
class Vec:
    """Homogeneous numeric vector; ``kind`` is ``"int"`` or ``"real"``."""

    kind: str
    items: tuple

    def __post_init__(self):
        if self.kind not in ("int", "real"):
            raise ValueError(f"bad vec kind {self.kind!r}")
        want = int if self.kind == "int" else float
        for x in self.items:
            if type(x) is not want:
                raise TypeError(f"vec[{self.kind}] cannot hold {x!r}")

    @classmethod
    def of(cls, items) -> Vec:
        items = tuple(items)
        if any(isinstance(x, float) for x in items):
            return cls("real", tuple(float(x) for x in items))
        return cls("int", items)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


@dataclass(eq=False)
class Closure:
    params: tuple[str, ...]
    body: Expr
    env: dict = field(default_factory=dict)

    def __eq__(self, other):
        return (
            isinstance(other, Closure)
            and self.params == other.params
            and self.body == other.body
            and encode_env(self.env) == encode_env(other.env)
        )

    def __repr__(self):
        return f"<closure ({' '.join(self.params)})>"


@dataclass(frozen=True)
class Resource:
    """Opaque handle tied to the process session that created it."""

    tag: str
    session: str = PROCESS_SESSION
    handle: str = field(default_factory=lambda: uuid.uuid4().hex[:8])

    def __repr__(self):
        return f"<resource {self.tag} {self.handle}>"


class Env:
    """Chained scope; lookup is innermost first and a missing name raises."""

    __slots__ = ("bindings", "parent")

    def __init__(self, bindings=None, parent=None):
        self.bindings = dict(bindings or {})
        self.parent = parent

    def find(self, name):
        env = self
        while env is not None:
            if name in env.bindings:
                return env
            env = env.parent
        return None

    def __contains__(self, name):
        return self.find(name) is not None

    def lookup(self, name):
        env = self.find(name)
        if env is None:
            raise KeyError(name)
        return env.bindings[name]

    def assign(self, name, value):
        """Rebind where ``name`` lives, or define it in the innermost scope."""
        env = self.find(name) or self
        env.bindings[name] = value

    def flatten(self) -> dict:
        out = {}
        env = self
        while env is not None:
            for k, v in env.bindings.items():
                out.setdefault(k, v)
            env = env.parent
        return out

    def child(self, bindings=None) -> Env:
        return Env(bindings, self)


def type_name(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "real"
    if isinstance(v, str):
        return "str"
    if isinstance(v, Vec):
        return "vec"
    if isinstance(v, list):
        return "list"
    if isinstance(v, Closure):
        return "closure"
    if isinstance(v, Resource):
        return "resource"
    return type(v).__name__


def check_int(v: int) -> int:
    if not INT_MIN <= v <= INT_MAX:
        raise OverflowError("integer overflow")
    return v


def to_value(obj):
    """Validate and normalize a host object into a Value."""
    if obj is None or isinstance(obj, (bool, float, str, Vec, Closure, Resource)):
        return obj
    if isinstance(obj, int):
        return check_int(obj)
    if isinstance(obj, (list, tuple)):
        return [to_value(x) for x in obj]
    raise TypeError(f"cannot convert {type(obj).__name__} to a task value")


def contains_resource(v) -> Resource | None:
    if isinstance(v, Resource):
        return v
    if isinstance(v, list):
        for x in v:
            found = contains_resource(x)
            if found is not None:
                return found
    if isinstance(v, Closure):
        for x in v.env.values():
            found = contains_resource(x)
            if found is not None:
                return found
    return None


# -- encoding ---------------------------------------------------------------

def real_to_hex(x: float) -> str:
    return "0x%016X" % struct.unpack(">Q", struct.pack(">d", x))[0]


def hex_to_real(s: str) -> float:
    if not (isinstance(s, str) and s[:2] in ("0x", "0X") and len(s) == 18):
        raise ValueError(f"bad real encoding {s!r}")
    return struct.unpack(">d", struct.pack(">Q", int(s[2:], 16)))[0]


def encode_value(v, name="<value>"):
    if v is None:
        return {"t": "null"}
    if isinstance(v, bool):
        return {"t": "bool", "v": v}
    if isinstance(v, int):
        return {"t": "int", "v": v}
    if isinstance(v, float):
        return {"t": "real", "v": real_to_hex(v)}
    if isinstance(v, str):
        return {"t": "str", "v": v}
    if isinstance(v, Vec):
        items = list(v.items) if v.kind == "int" else [real_to_hex(x) for x in v.items]
        return {"t": "vec", "k": v.kind, "v": items}
    if isinstance(v, list):
        return {"t": "list", "v": [encode_value(x, name) for x in v]}
    if isinstance(v, Closure):
        return {
            "t": "closure",
            "params": list(v.params),
            "body": unparse(v.body),
            "env": encode_env(v.env),
        }
    if isinstance(v, Resource):
        raise NonExportableError(name, v)
    raise TypeError(f"not a task value: {v!r}")


def decode_value(d):
    t = d["t"]
    if t == "null":
        return None
    if t == "bool":
        if not isinstance(d["v"], bool):
            raise ValueError("bad bool")
        return d["v"]
    if t == "int":
        v = d["v"]
        if type(v) is not int:
            raise ValueError("bad int")
        return check_int(v)
    if t == "real":
        return hex_to_real(d["v"])
    if t == "str":
        if not isinstance(d["v"], str):
            raise ValueError("bad str")
        return d["v"]
    if t == "vec":
        if d["k"] == "int":
            return Vec("int", tuple(check_int(x) for x in d["v"]))
        return Vec(d["k"], tuple(hex_to_real(x) for x in d["v"]))
    if t == "list":
        return [decode_value(x) for x in d["v"]]
    if t == "closure":
        return Closure(tuple(d["params"]), parse(d["body"]), decode_env(d["env"]))
    raise ValueError(f"unknown value tag {t!r}")


def encode_env(env: dict) -> dict:
    return {k: encode_value(v, k) for k, v in env.items()}


def decode_env(d: dict) -> dict:
    return {k: decode_value(v) for k, v in d.items()}


# -- display ----------------------------------------------------------------

def format_real(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    return "%.15g" % x


def format_value(v, top=True) -> str:
    """Human-readable text; a top-level string prints bare."""
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_real(v)
    if isinstance(v, str):
        return v if top else '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, Vec):
        return "[" + " ".join(format_value(x, False) for x in v.items) + "]"
    if isinstance(v, list):
        return "(list" + "".join(" " + format_value(x, False) for x in v) + ")"
    return repr(v)


def parse_value_literal(text: str):
    """Parse a command-line value: int, real, quoted or bare string, ``[..]`` vec."""
    s = text.strip()
    if s.startswith("[") and s.endswith("]"):
        parts = s[1:-1].replace(",", " ").split()
        nums = [parse_value_literal(p) for p in parts]
        if not all(isinstance(n, (int, float)) and not isinstance(n, bool) for n in nums):
            raise ValueError(f"vec literal must be numeric: {text!r}")
        return Vec.of(nums)
    if s in ("null", "true", "false"):
        return {"null": None, "true": True, "false": False}[s]
    try:
        return check_int(int(s))
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    if len(s) >= 2 and s[0] == s[-1] == '"':
        return s[1:-1]
    return text
