"""One-variable real expressions: parsing, evaluation, symbolic derivatives.

Grammar (standard precedence, ``^`` binds tighter than unary minus)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | 'u' | 'pi' | FUNC '(' expr ')' | ('max' | 'min') '(' expr ',' expr ')'
           | '(' expr ')'

    FUNC  := exp | log | sqrt | sin | cos | abs

``**`` is accepted as a synonym for ``^``.  The only variable is ``u``.

Expressions are immutable trees.  Evaluation compiles the tree once to a
numpy function, so ``evaluate`` accepts floats and arrays alike.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary", "Branch",
    "ExprSyntaxError", "DomainError", "parse", "evaluate", "differentiate",
    "derivative_at", "kink_points", "GRAMMAR_HELP",
]

GRAMMAR_HELP = (
    "Expressions in u: numbers, u, pi, + - * / ^ (or **), unary minus, "
    "exp, log, sqrt, sin, cos, abs, max(a,b), min(a,b)."
)

UNARY_FUNCS = ("exp", "log", "sqrt", "sin", "cos", "abs")
BINARY_FUNCS = ("max", "min")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DomainError(ValueError):
    """Evaluation left the real domain (log/sqrt/power of a bad argument, division by zero)."""


class Expr:
    """Base node.  Supports ``e(u)`` as a shorthand for :func:`evaluate`."""

    def __call__(self, u):
        return evaluate(self, u)

    def __str__(self):
        return _to_text(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    pass


@dataclass(frozen=True, eq=True)
class Unary(Expr):
    op: str  # 'neg' or one of UNARY_FUNCS
    arg: Expr


@dataclass(frozen=True, eq=True)
class Binary(Expr):
    op: str  # '+', '-', '*', '/', '^', 'max', 'min'
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Branch(Expr):
    """Piecewise selection produced by differentiating ``max``/``min``/``abs``.

    Returns ``on_a`` where ``a`` is the active argument of ``op(a, b)`` and
    ``on_b`` where ``b`` is.  At an exact tie the branch that stays active
    immediately to the right of the point wins (the faster-growing argument
    for ``max``, the slower one for ``min``, judged by ``da``/``db``), and the
    tie is reported as a kink.
    """

    op: str  # 'max' or 'min'
    a: Expr
    b: Expr
    da: Expr
    db: Expr
    on_a: Expr
    on_b: Expr


# ---------------------------------------------------------------- parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            pos += len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if kind == "op" and value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val == "u":
                return Var()
            if val == "pi":
                return Const(math.pi)
            if val in UNARY_FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            if val in BINARY_FUNCS:
                self.expect("(")
                a = self.expr()
                self.expect(",")
                b = self.expr()
                self.expect(")")
                return Binary(val, a, b)
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    >>> evaluate(parse("u*(1-u)"), 0.5)
    0.25
    """
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text).parse()


# ---------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _to_text(e: Expr) -> str:
    return _fmt(e)[0]


def _fmt(e: Expr):
    """Return (text, precedence) with 5 meaning atomic."""
    if isinstance(e, Const):
        v = e.value
        if v < 0 or (v == 0 and math.copysign(1.0, v) < 0):
            return f"-{repr(-v)}", 3
        return repr(v), 5
    if isinstance(e, Var):
        return "u", 5
    if isinstance(e, Unary):
        if e.op == "neg":
            inner, p = _fmt(e.arg)
            # ^ outranks negation, so only sums/products/negations need parens
            return f"-{inner if p > 3 else '(' + inner + ')'}", 3
        return f"{e.op}({_fmt(e.arg)[0]})", 5
    if isinstance(e, Binary):
        if e.op in BINARY_FUNCS:
            return f"{e.op}({_fmt(e.left)[0]}, {_fmt(e.right)[0]})", 5
        p = _PREC[e.op]
        lt, lp = _fmt(e.left)
        rt, rp = _fmt(e.right)
        if e.op == "^":
            left = lt if lp > p else f"({lt})"
            right = rt if rp >= p else f"({rt})"
            return f"{left}^{right}", p
        left = lt if lp >= p else f"({lt})"
        # '-' and '/' are left-associative: an equal-precedence right operand needs parens
        right = rt if rp > p or (rp == p and e.op in "+*") else f"({rt})"
        return f"{left} {e.op} {right}", p
    if isinstance(e, Branch):
        parts = ", ".join(_fmt(x)[0] for x in (e.a, e.b, e.da, e.db, e.on_a, e.on_b))
        return f"branch_{e.op}({parts})", 5
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------- evaluation

def _branch(op, a, b, da, db, on_a, on_b, kinks):
    a, b, da, db = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, da, db)))
    on_a = np.broadcast_to(np.asarray(on_a, dtype=float), a.shape)
    on_b = np.broadcast_to(np.asarray(on_b, dtype=float), a.shape)
    if op == "max":
        pick_a = (a > b) | ((a == b) & (da > db))
    else:
        pick_a = (a < b) | ((a == b) & (da < db))
    if kinks is not None and np.any(a == b):
        kinks.append(op)
    return np.where(pick_a, on_a, on_b)


def _pow(base, expo):
    return np.power(np.asarray(base, dtype=float), expo)


_NP_FUNCS = {
    "exp": "np.exp", "log": "np.log", "sqrt": "np.sqrt",
    "sin": "np.sin", "cos": "np.cos", "abs": "np.abs",
}


def _src(e: Expr) -> str:
    if isinstance(e, Const):
        return f"({e.value!r})"
    if isinstance(e, Var):
        return "u"
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{_src(e.arg)})"
        return f"{_NP_FUNCS[e.op]}({_src(e.arg)})"
    if isinstance(e, Binary):
        a, b = _src(e.left), _src(e.right)
        if e.op == "max":
            return f"np.maximum({a}, {b})"
        if e.op == "min":
            return f"np.minimum({a}, {b})"
        if e.op == "^":
            if isinstance(e.right, Const) and float(e.right.value).is_integer():
                n = int(e.right.value)
                if n == 2:
                    return f"({a} * {a})"
                return f"_pow({a}, {float(n)!r})"
            return f"_pow({a}, {b})"
        return f"({a} {e.op} {b})"
    if isinstance(e, Branch):
        args = ", ".join(_src(x) for x in (e.a, e.b, e.da, e.db, e.on_a, e.on_b))
        return f"_branch({e.op!r}, {args}, kinks)"
    raise TypeError(f"not an expression node: {e!r}")


@lru_cache(maxsize=512)
def _compiled(e: Expr):
    code = f"lambda u, kinks=None: {_src(e)}"
    return eval(code, {"np": np, "_pow": _pow, "_branch": _branch})  # noqa: S307


def evaluate(e: Expr, u, kinks: list | None = None):
    """Evaluate ``e`` at ``u`` (float or array).

    Raises DomainError when any value is not finite, e.g. ``log`` of a
    non-positive argument.  Integer powers of negative bases are fine.
    If ``kinks`` is a list, one entry is appended per max/min tie met while
    evaluating a derivative.
    """
    fn = _compiled(e)
    arr = np.asarray(u, dtype=float)
    with np.errstate(all="ignore"):
        out = np.asarray(fn(arr, kinks), dtype=float)
    if out.shape != arr.shape:
        out = np.broadcast_to(out, arr.shape).copy()
    if not np.all(np.isfinite(out)):
        bad = np.atleast_1d(arr)[~np.isfinite(np.atleast_1d(out))]
        where = float(bad[0]) if bad.size else float("nan")
        raise DomainError(f"{e} is not finite at u={where!r}")
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------- differentiation

ZERO = Const(0.0)
ONE = Const(1.0)


def _is(e, v):
    return isinstance(e, Const) and e.value == v


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def _sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def _div(a, b):
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return Binary("/", a, b)


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


@lru_cache(maxsize=512)
def differentiate(e: Expr) -> Expr:
    """Exact symbolic derivative with respect to ``u`` (no simplification pass)."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Unary):
        a = e.arg
        da = differentiate(a)
        if e.op == "neg":
            return _neg(da)
        if e.op == "exp":
            return _mul(e, da)
        if e.op == "log":
            return _div(da, a)
        if e.op == "sqrt":
            return _div(da, _mul(Const(2.0), e))
        if e.op == "sin":
            return _mul(Unary("cos", a), da)
        if e.op == "cos":
            return _neg(_mul(Unary("sin", a), da))
        if e.op == "abs":
            return Branch("max", a, _neg(a), da, _neg(da), da, _neg(da))
    if isinstance(e, Binary):
        a, b = e.left, e.right
        da, db = differentiate(a), differentiate(b)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if e.op == "/":
            return _div(_sub(_mul(da, b), _mul(a, db)), Binary("^", b, Const(2.0)))
        if e.op == "^":
            if isinstance(b, Const):
                if b.value == 0:
                    return ZERO
                return _mul(_mul(b, Binary("^", a, Const(b.value - 1.0))), da)
            if isinstance(a, Const):
                return _mul(_mul(e, Unary("log", a)), db)
            return _mul(e, _add(_mul(db, Unary("log", a)), _div(_mul(b, da), a)))
        if e.op in BINARY_FUNCS:
            return Branch(e.op, a, b, da, db, da, db)
    if isinstance(e, Branch):
        return Branch(e.op, e.a, e.b, e.da, e.db, differentiate(e.on_a), differentiate(e.on_b))
    raise TypeError(f"not an expression node: {e!r}")


def derivative_at(e: Expr, u: float) -> tuple[float, bool]:
    """Return ``(e'(u), kink)``; ``kink`` is True when a max/min/abs tie was hit."""
    kinks: list = []
    value = evaluate(differentiate(e), float(u), kinks)
    return value, bool(kinks)


ExprLike = Union[Expr, str]


def as_expr(e: ExprLike) -> Expr:
    return parse(e) if isinstance(e, str) else e


def _ties(e: Expr):
    """Yield the (a, b) argument pairs of every max/min/abs node."""
    if isinstance(e, Unary):
        if e.op == "abs":
            yield e.arg, ZERO
        yield from _ties(e.arg)
    elif isinstance(e, Binary):
        if e.op in BINARY_FUNCS:
            yield e.left, e.right
        yield from _ties(e.left)
        yield from _ties(e.right)
    elif isinstance(e, Branch):
        yield e.a, e.b
        for x in (e.a, e.b, e.on_a, e.on_b):
            yield from _ties(x)


def kink_points(e: Expr, lo: float = 0.0, hi: float = 1.0, n: int = 2001) -> list[float]:
    """Points in [lo, hi] where a max/min/abs switches branch.

    These are the sign changes of ``a - b`` plus the grid points where the two
    arguments agree up to rounding (``|a - b| <= 1e-12 max(1, |a|, |b|)``),
    which catches ties such as ``sin(pi) ~ 1e-16`` at the interval ends.
    """
    grid = np.linspace(lo, hi, n)
    found = []
    for a, b in _ties(e):
        va = np.broadcast_to(evaluate(a, grid), grid.shape)
        vb = np.broadcast_to(evaluate(b, grid), grid.shape)
        gap = va - vb
        tol = 1e-12 * np.maximum(1.0, np.maximum(np.abs(va), np.abs(vb)))
        s = np.where(np.abs(gap) <= tol, 0.0, np.sign(gap))
        for i in np.nonzero(s == 0)[0]:
            found.append(float(grid[i]))
        for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
            x0, x1 = grid[i], grid[i + 1]
            for _ in range(60):
                mid = 0.5 * (x0 + x1)
                if np.sign(evaluate(a, mid) - evaluate(b, mid)) == s[i]:
                    x0 = mid
                else:
                    x1 = mid
            found.append(0.5 * (x0 + x1))
    return sorted(set(round(x, 12) for x in found))
