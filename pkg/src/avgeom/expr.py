"""Arithmetic expressions over base, fiber, angle and action variables.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right associative
    primary := NUMBER | VAR | FUNC '(' args ')' | '(' expr ')'

Variables are ``x1..xn``, ``y1..yn``, ``t1..tk``, ``phi1..phik`` and
``I1..Im``; the admissible ranges come from a context such as
``{"x": 2, "y": 2}``.  Parsed expressions evaluate on floats, numpy arrays and
:class:`avgeom.jets.Jet` values alike.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import jets
from .errors import AvgeomError

__all__ = [
    "ExpressionError",
    "ExpressionSyntaxError",
    "UnknownVariableError",
    "ArityError",
    "ExpressionDomainError",
    "Expression",
    "parse",
]

FUNCTIONS = {
    "sqrt": (1, jets.sqrt),
    "exp": (1, jets.exp),
    "log": (1, jets.log),
    "sin": (1, jets.sin),
    "cos": (1, jets.cos),
    "abs": (1, jets.fabs),
    "pow": (2, jets.power),
}
VARIABLE_KINDS = ("phi", "x", "y", "t", "I")
_VARIABLE = re.compile(r"^(phi|x|y|t|I)([1-9][0-9]*)$")
_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


class ExpressionError(AvgeomError, ValueError):
    """Problem with an expression; ``offset`` is a 1-based byte position."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message, offset, expected=()):
        self.expected = list(expected)
        if self.expected:
            message = f"{message}; expected {' or '.join(repr(e) for e in self.expected)}"
        super().__init__(message, offset)


class UnknownVariableError(ExpressionError):
    pass


class ArityError(ExpressionError):
    pass


class ExpressionDomainError(ExpressionError, ArithmeticError):
    pass


# -- syntax tree ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    offset: int


@dataclass(frozen=True)
class Var:
    name: str
    offset: int


@dataclass(frozen=True)
class Neg:
    operand: object
    offset: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    offset: int


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    offset: int


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    offset: int


def _tokenize(source: str):
    tokens = []
    pos = 0
    stripped = source.rstrip()
    while pos < len(stripped):
        match = _TOKEN.match(stripped, pos)
        if match is None or match.end() == pos:
            bad = pos + len(stripped[pos:]) - len(stripped[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {stripped[bad]!r}", _byte_offset(source, bad))
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), _byte_offset(source, match.start(kind))))
        pos = match.end()
    tokens.append(_Token("end", "", len(source.encode("utf-8")) + 1))
    return tokens


def _byte_offset(source, index):
    return len(source[:index].encode("utf-8")) + 1


class _Parser:
    def __init__(self, source, context):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.context = context

    @property
    def current(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        tok = self.current
        if tok.text != text or tok.kind != "op":
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ExpressionSyntaxError(f"unexpected {found}", tok.offset, [text])
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.current.kind != "end":
            tok = self.current
            raise ExpressionSyntaxError(f"unexpected {tok.text!r}", tok.offset, ["operator", "end of input"])
        return node

    def expr(self):
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            tok = self.advance()
            node = BinOp(tok.text, node, self.term(), tok.offset)
        return node

    def term(self):
        node = self.unary()
        while self.current.kind == "op" and self.current.text in "*/":
            tok = self.advance()
            node = BinOp(tok.text, node, self.unary(), tok.offset)
        return node

    def unary(self):
        if self.current.kind == "op" and self.current.text == "-":
            tok = self.advance()
            return Neg(self.unary(), tok.offset)
        return self.power()

    def power(self):
        base = self.primary()
        if self.current.kind == "op" and self.current.text == "^":
            tok = self.advance()
            return BinOp("^", base, self.unary(), tok.offset)
        return base

    def primary(self):
        tok = self.current
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text), tok.offset)
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                return self.call(tok)
            self.check_variable(tok)
            return Var(tok.text, tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExpressionSyntaxError(f"unexpected {found}", tok.offset, ["number", "variable", "function", "("])

    def call(self, name_tok):
        self.expect("(")
        args = [self.expr()]
        while self.current.kind == "op" and self.current.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name_tok.text][0]
        if len(args) != arity:
            raise ArityError(f"{name_tok.text} takes {arity} argument(s), got {len(args)}", name_tok.offset)
        return Call(name_tok.text, tuple(args), name_tok.offset)

    def check_variable(self, tok):
        match = _VARIABLE.match(tok.text)
        if match is None:
            raise UnknownVariableError(f"unknown identifier {tok.text!r}", tok.offset)
        kind, index = match.group(1), int(match.group(2))
        limit = self.context.get(kind, 0)
        if index > limit:
            raise UnknownVariableError(
                f"variable {tok.text!r} is outside the declared dimensions ({kind}1..{kind}{limit})", tok.offset
            )


def _to_source(node):
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({_to_source(node.left)} {node.op} {_to_source(node.right)})"
    return f"{node.func}({', '.join(_to_source(a) for a in node.args)})"


def _walk(node):
    yield node
    for child in _children(node):
        yield from _walk(child)


def _children(node):
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def _plain(v):
    return np.asarray(jets.primal(v), dtype=float)


class Expression:
    """Immutable parsed expression."""

    def __init__(self, root, source, context):
        self.root = root
        self.source = source
        self.context = dict(context)

    def __repr__(self):
        return f"Expression({self.source!r})"

    def to_source(self) -> str:
        """Fully parenthesised normal form; reparses to an equivalent tree."""
        return _to_source(self.root)

    @property
    def variables(self):
        return sorted({n.name for n in _walk(self.root) if isinstance(n, Var)})

    @property
    def uses_abs(self) -> bool:
        return any(isinstance(n, Call) and n.func == "abs" for n in _walk(self.root))

    def evaluate(self, bindings: Mapping):
        return self._eval(self.root, bindings)

    __call__ = evaluate

    def _fail(self, message, node):
        raise ExpressionDomainError(f"{message} in {_to_source(node)!r}", node.offset)

    def _eval(self, node, env):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            try:
                return env[node.name]
            except KeyError:
                raise ExpressionError(f"variable {node.name!r} is not bound", node.offset) from None
        if isinstance(node, Neg):
            return -self._eval(node.operand, env)
        if isinstance(node, BinOp):
            left = self._eval(node.left, env)
            right = self._eval(node.right, env)
            op = node.op
            if op == "+":
                return left + right
            if op == "-":
                return left - right
            if op == "*":
                return left * right
            if op == "/":
                if np.any(_plain(right) == 0):
                    self._fail("division by zero", node)
                return left / right
            return self._power(left, right, node)
        args = [self._eval(a, env) for a in node.args]
        func = node.func
        if func == "log" and np.any(_plain(args[0]) <= 0):
            self._fail("log of a non-positive value", node)
        if func == "sqrt" and np.any(_plain(args[0]) < 0):
            self._fail("sqrt of a negative value", node)
        if func == "pow":
            return self._power(args[0], args[1], node)
        return FUNCTIONS[func][1](args[0])

    def _power(self, base, exponent, node):
        b, e = _plain(base), _plain(exponent)
        if np.any((b < 0) & (e != np.round(e))):
            self._fail("fractional power of a negative value", node)
        if np.any((b == 0) & (e < 0)):
            self._fail("negative power of zero", node)
        if isinstance(base, jets.Jet) or isinstance(exponent, jets.Jet):
            return jets.power(base, exponent)
        return np.power(np.asarray(base, dtype=float), exponent)


def parse(source: str, context: Mapping[str, int] | None = None) -> Expression:
    """Parse ``source``; ``context`` maps variable kinds to declared dimensions."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    context = dict(context or {})
    unknown = set(context) - set(VARIABLE_KINDS)
    if unknown:
        raise ValueError(f"unknown variable kinds {sorted(unknown)}")
    return Expression(_Parser(source, context).parse(), source, context)
