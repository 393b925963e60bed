"""Parsing and evaluation of closed-form coefficient expressions.

Time-dependent coefficients are written as text over the single variable
``t``, e.g. ``(0.5+1)*sin(t)/(2+cos(t))``.  The grammar supports decimal
literals, ``pi``, ``+ - * /``, right-associative ``^``, unary minus,
parentheses, and the functions ``sin``, ``cos``, ``exp``, ``abs``.
Precedence is ``^`` > unary minus > ``* /`` > ``+ -``; binary operators of
equal precedence associate left.

Expression trees are immutable and hashable; printing with
:func:`to_source` and re-parsing reproduces the tree node for node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Expr", "Num", "Pi", "Var", "Neg", "BinOp", "Func",
    "ExprError", "ExprSyntaxError", "UnknownIdentifierError", "ExprEvalError",
    "parse", "to_source", "evaluate", "compile_scalar", "compile_vector",
    "FUNCTIONS",
]

FUNCTIONS = ("abs", "cos", "exp", "sin")
_LEGAL_NAMES = FUNCTIONS + ("pi", "t")


class ExprError(ValueError):
    """Base class for expression parsing/evaluation errors."""


class ExprSyntaxError(ExprError):
    """Malformed source text; carries the byte offset and expected tokens."""

    def __init__(self, message: str, offset: int, expected: tuple = ()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f"syntax error at offset {offset}: {message}"
        if self.expected:
            detail += " (expected " + " or ".join(self.expected) + ")"
        super().__init__(detail)


class UnknownIdentifierError(ExprError):
    """Identifier other than ``t``, ``pi`` or a supported function name."""

    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(
            f"unknown identifier {name!r} at offset {offset}; "
            "legal names are " + ", ".join(_LEGAL_NAMES)
        )


class ExprEvalError(ExprError):
    """Non-finite result during evaluation; carries the offending subtree."""

    def __init__(self, message: str, subtree_source: str, t: float):
        self.subtree_source = subtree_source
        self.t = t
        super().__init__(f"{message} at t={t!r} in subexpression '{subtree_source}'")


class Expr:
    """Base node of a parsed expression tree.  Nodes are frozen dataclasses."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Num(Expr):
    """Nonnegative numeric literal (signs are carried by :class:`Neg`)."""
    value: float


@dataclass(frozen=True)
class Pi(Expr):
    """The constant pi."""


@dataclass(frozen=True)
class Var(Expr):
    """The time variable t."""


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    """Binary operator node; ``op`` is one of ``+ - * / ^``."""
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Func(Expr):
    """Unary function application; ``name`` is one of ``sin cos exp abs``."""
    name: str
    arg: Expr


# ---------------------------------------------------------------------------
# Tokenizer

_OPERATOR_CHARS = "+-*/^()"


def _tokenize(source: str):
    """Yield (kind, text, offset) triples; kinds: number, name, op, end."""
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in _OPERATOR_CHARS:
            tokens.append(("op", ch, i))
            i += 1
            continue
        if ch.isdigit():
            start = i
            while i < n and source[i].isdigit():
                i += 1
            if i < n and source[i] == ".":
                i += 1
                if i >= n or not source[i].isdigit():
                    raise ExprSyntaxError("digit must follow decimal point", i,
                                          expected=("digit",))
                while i < n and source[i].isdigit():
                    i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j >= n or not source[j].isdigit():
                    raise ExprSyntaxError("malformed exponent", j,
                                          expected=("digit",))
                i = j
                while i < n and source[i].isdigit():
                    i += 1
            tokens.append(("number", source[start:i], start))
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            tokens.append(("name", source[start:i], start))
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Recursive-descent parser

class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, symbol: str):
        kind, text, offset = self.peek()
        if kind == "op" and text == symbol:
            return self.advance()
        raise ExprSyntaxError(f"got {text!r}" if text else "unexpected end of input",
                              offset, expected=(f"'{symbol}'",))

    def parse(self) -> Expr:
        node = self.additive()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {text!r}", offset,
                                  expected=("end of input", "operator"))
        return node

    def additive(self) -> Expr:
        node = self.multiplicative()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.multiplicative())
            else:
                return node

    def multiplicative(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            # right-associative; the exponent may carry its own unary minus
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.advance()
        if kind == "number":
            value = float(text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"number literal {text!r} overflows", offset)
            return Num(value)
        if kind == "name":
            if text == "t":
                return Var()
            if text == "pi":
                return Pi()
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.additive()
                self.expect_op(")")
                return Func(text, arg)
            raise UnknownIdentifierError(text, offset)
        if kind == "op" and text == "(":
            node = self.additive()
            self.expect_op(")")
            return node
        what = f"got {text!r}" if text else "unexpected end of input"
        raise ExprSyntaxError(what, offset,
                              expected=("number", "name", "'('", "'-'"))


def parse(source: str) -> Expr:
    """Parse expression text into a tree.

    Raises :class:`ExprSyntaxError` (with byte offset and expected-token
    set) on malformed input and :class:`UnknownIdentifierError` for any
    identifier other than ``t``, ``pi`` and the supported function names.
    """
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty source", 0, expected=("expression",))
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Printing

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        if node.op in "+-":
            return _PREC_ADD
        if node.op in "*/":
            return _PREC_MUL
        return _PREC_POW
    if isinstance(node, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def to_source(node: Expr) -> str:
    """Render a tree as parseable text; ``parse(to_source(e))`` equals ``e``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Func):
        return f"{node.name}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        if _prec(node.operand) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        left, right = to_source(node.left), to_source(node.right)
        if node.op == "^":
            # right-associative: parenthesize base on ties or lower precedence
            if _prec(node.left) <= _PREC_POW:
                left = f"({left})"
            if _prec(node.right) < _PREC_POW:
                right = f"({right})"
        else:
            if _prec(node.left) < _prec(node):
                left = f"({left})"
            if _prec(node.right) <= _prec(node):
                right = f"({right})"
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an Expr node: {node!r}")


# ---------------------------------------------------------------------------
# Evaluation

def evaluate(node: Expr, t: float) -> float:
    """Evaluate at time ``t`` in IEEE double precision.

    Non-finite intermediate results (poles, overflow, domain errors) raise
    :class:`ExprEvalError` naming the offending subtree.
    """
    value = _eval_node(node, float(t))
    return value


def _eval_node(node: Expr, t: float) -> float:
    try:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Pi):
            return math.pi
        if isinstance(node, Var):
            return t
        if isinstance(node, Neg):
            return -_eval_node(node.operand, t)
        if isinstance(node, Func):
            arg = _eval_node(node.arg, t)
            result = _FUNC_SCALAR[node.name](arg)
        elif isinstance(node, BinOp):
            left = _eval_node(node.left, t)
            right = _eval_node(node.right, t)
            result = _apply_binop(node.op, left, right)
        else:
            raise TypeError(f"not an Expr node: {node!r}")
    except ExprEvalError:
        raise
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise ExprEvalError(str(exc) or "domain error", to_source(node), t) from None
    if not math.isfinite(result):
        raise ExprEvalError("non-finite result", to_source(node), t)
    return result


def _apply_binop(op: str, left: float, right: float) -> float:
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        return left / right
    return math.pow(left, right)


_FUNC_SCALAR = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "abs": abs}
_FUNC_VECTOR = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}


def compile_scalar(node: Expr) -> Callable[[float], float]:
    """Compile to a fast float->float closure (no finiteness checking)."""
    if isinstance(node, Num):
        v = node.value
        return lambda t: v
    if isinstance(node, Pi):
        return lambda t: math.pi
    if isinstance(node, Var):
        return lambda t: t
    if isinstance(node, Neg):
        f = compile_scalar(node.operand)
        return lambda t: -f(t)
    if isinstance(node, Func):
        g = _FUNC_SCALAR[node.name]
        f = compile_scalar(node.arg)
        return lambda t: g(f(t))
    if isinstance(node, BinOp):
        lf = compile_scalar(node.left)
        rf = compile_scalar(node.right)
        op = node.op
        if op == "+":
            return lambda t: lf(t) + rf(t)
        if op == "-":
            return lambda t: lf(t) - rf(t)
        if op == "*":
            return lambda t: lf(t) * rf(t)
        if op == "/":
            return lambda t: lf(t) / rf(t)
        return lambda t: math.pow(lf(t), rf(t))
    raise TypeError(f"not an Expr node: {node!r}")


def _compile_vector_raw(node: Expr):
    if isinstance(node, Num):
        v = node.value
        return lambda t: v
    if isinstance(node, Pi):
        return lambda t: math.pi
    if isinstance(node, Var):
        return lambda t: t
    if isinstance(node, Neg):
        f = _compile_vector_raw(node.operand)
        return lambda t: -f(t)
    if isinstance(node, Func):
        g = _FUNC_VECTOR[node.name]
        f = _compile_vector_raw(node.arg)
        return lambda t: g(f(t))
    if isinstance(node, BinOp):
        lf = _compile_vector_raw(node.left)
        rf = _compile_vector_raw(node.right)
        op = node.op
        if op == "+":
            return lambda t: lf(t) + rf(t)
        if op == "-":
            return lambda t: lf(t) - rf(t)
        if op == "*":
            return lambda t: lf(t) * rf(t)
        if op == "/":
            return lambda t: np.divide(lf(t), rf(t))
        return lambda t: np.power(lf(t), rf(t))
    raise TypeError(f"not an Expr node: {node!r}")


def compile_vector(node: Expr) -> Callable[[np.ndarray], np.ndarray]:
    """Compile to an ndarray->ndarray closure.

    Invalid operations produce inf/nan entries silently (IEEE semantics);
    callers that need diagnostics check finiteness of the samples.
    """
    raw = _compile_vector_raw(node)

    def fn(ts):
        ts = np.asarray(ts, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = raw(ts)
        out = np.asarray(out, dtype=float)
        if out.shape != ts.shape:
            out = np.full(ts.shape, float(out))
        return out

    return fn
