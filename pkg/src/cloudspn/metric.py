"""Mercury-style marking predicates such as ``P{(#VMNext_On > 0) AND (#VR_On > 0)}``.

Grammar (keywords case-insensitive)::

    metric := 'P' '{' expr '}' | expr
    expr   := and ( OR and )*
    and    := not ( AND not )*
    not    := NOT not | atom
    atom   := '(' expr ')' | term relop term
    term   := '#' IDENT | INTEGER
    relop  := '>' | '>=' | '<' | '<=' | '=' | '<>'

Evaluation works on a single marking (sequence of ints) or, vectorised, on a
2-D integer array with one marking per row.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "MetricSyntaxError",
    "UnknownPlaceError",
    "Or",
    "And",
    "Not",
    "Compare",
    "TokenCount",
    "IntLiteral",
    "parse_metric",
    "format_metric",
    "place_names",
    "bind",
    "BoundMetric",
    "eval_predicate",
]


class MetricSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UnknownPlaceError(KeyError):
    def __init__(self, names):
        self.names = tuple(names)
        super().__init__(", ".join(f"unknown place {n}" for n in self.names))

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class TokenCount:
    place: str


@dataclass(frozen=True)
class IntLiteral:
    value: int


Term = Union[TokenCount, IntLiteral]


@dataclass(frozen=True)
class Compare:
    op: str
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    operands: tuple


@dataclass(frozen=True)
class Or:
    operands: tuple


Expr = Union[Or, And, Not, Compare]

RELOPS = (">=", "<=", "<>", ">", "<", "=")
_OPS = {
    ">": operator.gt,
    ">=": operator.ge,
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    "<>": operator.ne,
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<relop>>=|<=|<>|>|<|=)
  | (?P<count>\#[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(){}])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise MetricSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "word":
                upper = value.upper()
                if upper in ("AND", "OR", "NOT"):
                    kind, value = upper, upper
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        if tok[0] == "eof":
            message = f"{message}, got end of input"
        return MetricSyntaxError(message, tok[2], self.text)

    def expect(self, kind, value=None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            raise self.error(f"expected {value or kind!r}")
        return self.advance()

    def parse(self) -> Expr:
        kind, value, _ = self.peek()
        nxt = self.tokens[self.i + 1]
        if kind == "word" and value.upper() == "P" and nxt[:2] == ("punct", "{"):
            self.i += 2
            expr = self.expr()
            self.expect("punct", "}")
        else:
            expr = self.expr()
        if self.peek()[0] != "eof":
            raise self.error("unexpected trailing input")
        return expr

    def expr(self):
        items = [self.conj()]
        while self.peek()[0] == "OR":
            self.advance()
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self):
        items = [self.neg()]
        while self.peek()[0] == "AND":
            self.advance()
            items.append(self.neg())
        return items[0] if len(items) == 1 else And(tuple(items))

    def neg(self):
        if self.peek()[0] == "NOT":
            self.advance()
            return Not(self.neg())
        return self.atom()

    def atom(self):
        if self.peek()[:2] == ("punct", "("):
            self.advance()
            inner = self.expr()
            self.expect("punct", ")")
            return inner
        lhs = self.term()
        tok = self.peek()
        if tok[0] != "relop":
            raise self.error("expected comparison operator")
        self.advance()
        if self.peek()[0] not in ("count", "int"):
            raise self.error(f"incomplete comparison after {tok[1]!r}", tok)
        rhs = self.term()
        return Compare(tok[1], lhs, rhs)

    def term(self):
        tok = self.peek()
        if tok[0] == "count":
            self.advance()
            return TokenCount(tok[1][1:])
        if tok[0] == "int":
            self.advance()
            return IntLiteral(int(tok[1]))
        raise self.error("expected '#Place' or integer")


def parse_metric(text: str) -> Expr:
    """Parse a predicate, with or without the ``P{...}`` wrapper."""
    return _Parser(text).parse()


def _format_term(term: Term) -> str:
    return f"#{term.place}" if isinstance(term, TokenCount) else str(term.value)


def format_metric(expr: Expr, wrap: bool = True) -> str:
    """Pretty-print ``expr``; every compound operand is parenthesised."""

    def fmt(node) -> str:
        if isinstance(node, Compare):
            return f"{_format_term(node.lhs)} {node.op} {_format_term(node.rhs)}"
        if isinstance(node, Not):
            return f"NOT ({fmt(node.operand)})"
        joiner = " AND " if isinstance(node, And) else " OR "
        return joiner.join(f"({fmt(op)})" for op in node.operands)

    body = fmt(expr)
    return f"P{{{body}}}" if wrap else body


def place_names(expr: Expr) -> list[str]:
    """Place names referenced by ``expr``, in first-occurrence order."""
    seen: dict[str, None] = {}

    def walk(node):
        if isinstance(node, Compare):
            for term in (node.lhs, node.rhs):
                if isinstance(term, TokenCount):
                    seen.setdefault(term.place, None)
        elif isinstance(node, Not):
            walk(node.operand)
        else:
            for op in node.operands:
                walk(op)

    walk(expr)
    return list(seen)


class BoundMetric:
    """A predicate whose place names have been resolved to indices of a net.

    Calling the object on a marking returns a bool; calling it on a 2-D array
    of markings returns a boolean array with one entry per row.
    """

    def __init__(self, expr: Expr, index: dict[str, int], num_places: int):
        self.expr = expr
        self.index = index
        self.num_places = num_places
        self._scalar = self._compile(expr)

    def __repr__(self):
        return f"BoundMetric({format_metric(self.expr)!r})"

    def __call__(self, marking):
        if isinstance(marking, (tuple, list)):
            return self._scalar(marking)
        tokens = np.asarray(marking)
        if tokens.ndim == 1:
            return self._scalar(tokens)
        return self._vector(self.expr, tokens)

    def _compile(self, node):
        if isinstance(node, Compare):
            op = _OPS[node.op]
            lhs, rhs = node.lhs, node.rhs
            if isinstance(lhs, TokenCount) and isinstance(rhs, IntLiteral):
                i, k = self.index[lhs.place], rhs.value
                return lambda m: bool(op(m[i], k))
            if isinstance(lhs, IntLiteral) and isinstance(rhs, TokenCount):
                k, i = lhs.value, self.index[rhs.place]
                return lambda m: bool(op(k, m[i]))
            if isinstance(lhs, TokenCount):
                i, j = self.index[lhs.place], self.index[rhs.place]
                return lambda m: bool(op(m[i], m[j]))
            value = bool(op(lhs.value, rhs.value))
            return lambda m: value
        if isinstance(node, Not):
            inner = self._compile(node.operand)
            return lambda m: not inner(m)
        parts = [self._compile(op) for op in node.operands]
        if isinstance(node, And):
            return lambda m: all(f(m) for f in parts)
        return lambda m: any(f(m) for f in parts)

    def _term(self, term, tokens):
        if isinstance(term, IntLiteral):
            return np.full(tokens.shape[0], term.value)
        return tokens[:, self.index[term.place]]

    def _vector(self, node, tokens):
        if isinstance(node, Compare):
            return _OPS[node.op](self._term(node.lhs, tokens), self._term(node.rhs, tokens))
        if isinstance(node, Not):
            return ~self._vector(node.operand, tokens)
        out = self._vector(node.operands[0], tokens)
        for op in node.operands[1:]:
            out = (out & self._vector(op, tokens)) if isinstance(node, And) else (out | self._vector(op, tokens))
        return out


def bind(expr: Expr | str, names) -> BoundMetric:
    """Resolve place names case-insensitively.

    ``names`` is either a net (anything with a ``place_names`` attribute) or a
    sequence of place names in index order. Raises :class:`UnknownPlaceError`
    listing every name that does not resolve.
    """
    if isinstance(expr, str):
        expr = parse_metric(expr)
    if hasattr(names, "place_names"):
        names = names.place_names
    lookup = {n.lower(): i for i, n in enumerate(names)}
    index = {}
    missing = []
    for name in place_names(expr):
        i = lookup.get(name.lower())
        if i is None:
            missing.append(name)
        else:
            index[name] = i
    if missing:
        raise UnknownPlaceError(missing)
    return BoundMetric(expr, index, len(names))


def eval_predicate(bm: BoundMetric, marking) -> bool:
    return bool(bm(marking))
