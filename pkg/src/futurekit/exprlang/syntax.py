"""AST, S-expression reader and printer for task expressions."""
from __future__ import annotations

import json
import math
import re
import struct
from dataclasses import dataclass

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
OPERATORS = frozenset({"+", "-", "*", "/", "<", ">", "<=", ">=", "==", "!="})
KEYWORDS = frozenset({"let", "lambda", "if", "begin", "set!"})
_CONSTANTS = {"null": None, "true": True, "false": False}
_SPECIAL_REALS = {"#inf": math.inf, "#-inf": -math.inf, "#nan": math.nan}

_INT_RE = re.compile(r"[+-]?\d+\Z")
_REAL_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\Z")


class ParseError(SyntaxError):
    """Malformed source text; ``line`` and ``column`` are 1-based."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


def is_identifier(name: str) -> bool:
    if name in KEYWORDS or name in _CONSTANTS:
        return False
    return bool(IDENT_RE.match(name)) or name in OPERATORS


def _literal_key(value):
    if isinstance(value, float):
        return ("real", struct.pack(">d", value))
    return (type(value).__name__, value)


class Expr:
    __slots__ = ()


@dataclass(frozen=True, eq=False)
class Literal(Expr):
    value: object  # None | bool | int | float | str

    # bool is an int subclass and 1 == 1.0, so compare on kind and bits
    def __eq__(self, other):
        return isinstance(other, Literal) and _literal_key(self.value) == _literal_key(other.value)

    def __hash__(self):
        return hash(_literal_key(self.value))


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Let(Expr):
    bindings: tuple[tuple[str, Expr], ...]
    body: Expr


@dataclass(frozen=True)
class Lambda(Expr):
    params: tuple[str, ...]
    body: Expr


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    else_: Expr


@dataclass(frozen=True)
class Begin(Expr):
    steps: tuple[Expr, ...]


@dataclass(frozen=True)
class Assign(Expr):
    name: str
    value: Expr


# -- reader -----------------------------------------------------------------

@dataclass
class _Tok:
    kind: str  # "(", ")", "str", "atom"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)|(?P<comment>;[^\n]*)|(?P<open>\()|(?P<close>\))"""
    r"""|(?P<str>"(?:[^"\\\n]|\\.)*")|(?P<badstr>")|(?P<atom>[^\s()";]+)"""
)


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        col = pos - line_start + 1
        kind = m.lastgroup
        text = m.group()
        if kind == "badstr":
            raise ParseError("unterminated string literal", line, col)
        if kind == "open":
            toks.append(_Tok("(", text, line, col))
        elif kind == "close":
            toks.append(_Tok(")", text, line, col))
        elif kind in ("str", "atom"):
            toks.append(_Tok(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Reader:
    def __init__(self, src):
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, message, tok):
        raise ParseError(message, tok.line, tok.col)

    def expr(self) -> Expr:
        tok = self.next()
        if tok.kind == "eof":
            self.error("unexpected end of input", tok)
        if tok.kind == ")":
            self.error("unexpected ')'", tok)
        if tok.kind == "str":
            try:
                return Literal(json.loads(tok.text, strict=False))
            except ValueError:
                self.error("invalid escape in string literal", tok)
        if tok.kind == "atom":
            return self.atom(tok)
        return self.form(tok)

    def atom(self, tok) -> Expr:
        text = tok.text
        if text in _CONSTANTS:
            return Literal(_CONSTANTS[text])
        if text in _SPECIAL_REALS:
            return Literal(_SPECIAL_REALS[text])
        if _INT_RE.match(text):
            value = int(text)
            if not INT_MIN <= value <= INT_MAX:
                self.error(f"integer literal {text} out of 64-bit range", tok)
            return Literal(value)
        if _REAL_RE.match(text):
            return Literal(float(text))
        if text in KEYWORDS:
            self.error(f"'{text}' cannot be used as a value", tok)
        if not is_identifier(text):
            self.error(f"invalid token {text!r}", tok)
        return Var(text)

    def ident(self, what) -> str:
        tok = self.next()
        if tok.kind != "atom" or not is_identifier(tok.text) or tok.text in _CONSTANTS:
            self.error(f"expected {what}", tok)
        return tok.text

    def expect(self, kind, what):
        tok = self.next()
        if tok.kind != kind:
            if tok.kind == "eof":
                self.error(f"unclosed '(' (expected {what})", tok)
            self.error(f"expected {what}", tok)
        return tok

    def rest(self, open_tok) -> list[Expr]:
        items = []
        while self.peek().kind != ")":
            if self.peek().kind == "eof":
                self.error("unclosed '('", open_tok)
            items.append(self.expr())
        self.next()
        return items

    def form(self, open_tok) -> Expr:
        head = self.peek()
        if head.kind != "atom" or not (is_identifier(head.text) or head.text in KEYWORDS):
            if head.kind == "eof":
                self.error("unclosed '('", open_tok)
            self.error("expected an operator or special form", head)
        self.next()
        name = head.text
        if name == "let":
            self.expect("(", "binding list")
            bindings = []
            while self.peek().kind == "(":
                self.next()
                var = self.ident("binding name")
                value = self.expr()
                self.expect(")", "')' after binding")
                bindings.append((var, value))
            self.expect(")", "')' after bindings")
            body = self.rest(open_tok)
            if len(body) != 1:
                self.error("let takes exactly one body expression", open_tok)
            return Let(tuple(bindings), body[0])
        if name == "lambda":
            self.expect("(", "parameter list")
            params = []
            while self.peek().kind != ")":
                params.append(self.ident("parameter name"))
            self.next()
            if len(set(params)) != len(params):
                self.error("duplicate lambda parameter", open_tok)
            body = self.rest(open_tok)
            if len(body) != 1:
                self.error("lambda takes exactly one body expression", open_tok)
            return Lambda(tuple(params), body[0])
        if name == "if":
            parts = self.rest(open_tok)
            if len(parts) not in (2, 3):
                self.error("if takes a condition and one or two branches", open_tok)
            else_ = parts[2] if len(parts) == 3 else Literal(None)
            return If(parts[0], parts[1], else_)
        if name == "begin":
            steps = self.rest(open_tok)
            if not steps:
                self.error("begin needs at least one expression", open_tok)
            return Begin(tuple(steps))
        if name == "set!":
            var = self.ident("variable name")
            value = self.expr()
            self.expect(")", "')' closing set!")
            return Assign(var, value)
        if name in _CONSTANTS:
            self.error(f"'{name}' is not callable", head)
        return Call(name, tuple(self.rest(open_tok)))


def parse(source: str) -> Expr:
    """Read exactly one expression from ``source``."""
    reader = _Reader(source)
    try:
        expr = reader.expr()
    except RecursionError:
        raise ParseError("expression nested too deeply", 1, 1) from None
    tok = reader.peek()
    if tok.kind != "eof":
        reader.error("unexpected text after expression", tok)
    return expr


# -- printer ----------------------------------------------------------------

def _print_literal(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "#nan"
        if math.isinf(value):
            return "#inf" if value > 0 else "#-inf"
        return repr(value)
    return json.dumps(value, ensure_ascii=False)


def unparse(expr: Expr) -> str:
    """Print ``expr`` so that ``parse(unparse(e)) == e``."""
    if isinstance(expr, Literal):
        return _print_literal(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Call):
        return "(" + " ".join([expr.fn, *map(unparse, expr.args)]) + ")"
    if isinstance(expr, Let):
        binds = " ".join(f"({n} {unparse(v)})" for n, v in expr.bindings)
        return f"(let ({binds}) {unparse(expr.body)})"
    if isinstance(expr, Lambda):
        return f"(lambda ({' '.join(expr.params)}) {unparse(expr.body)})"
    if isinstance(expr, If):
        return f"(if {unparse(expr.cond)} {unparse(expr.then)} {unparse(expr.else_)})"
    if isinstance(expr, Begin):
        return "(begin " + " ".join(map(unparse, expr.steps)) + ")"
    if isinstance(expr, Assign):
        return f"(set! {expr.name} {unparse(expr.value)})"
    raise TypeError(f"not an expression: {expr!r}")
