"""
A small text language for analytic functions of ``z``.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | atom ('^' signed-int)?
    atom   := number | 'i' | 'z' | func '(' expr ')' | '(' expr ')'
    func   := 'exp' | 'log' | 'sqrt' | 'powc' '[' expr ']'

``powc[c](u)`` is ``u**c`` on the principal branch, ``c`` being a ``z``-free
constant expression. Integer powers ``u^n`` need ``|n| <= 64`` and never touch
a branch cut. Expressions evaluate to :class:`~schwarzlab.jet_core.Jet3`
values (:func:`eval_jet`), to plain values (:func:`evaluate`), or to
high-precision values (:func:`evaluate_mp`) for the finite-difference oracle.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .errors import (
    BranchCutViolation,
    DepthLimitExceeded,
    DivisionByZeroJet,
    ExprSyntaxError,
    UnknownFunction,
)
from .jet_core import Jet3, jet_arith, jet_compose, jet_pow_int, jet_transcendental, on_branch_cut

MAX_DEPTH = 64
MAX_INT_POWER = 64


class Expr:
    """Base class of expression-tree nodes (all nodes are frozen dataclasses)."""

    def __str__(self) -> str:
        return to_text(self)

    # convenience operators so map-level code can build trees symbolically
    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Neg(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: complex


@dataclass(frozen=True, repr=False)
class Var(Expr):
    pass


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class PowInt(Expr):
    base: Expr
    n: int


@dataclass(frozen=True, repr=False)
class PowC(Expr):
    c: complex
    arg: Expr


@dataclass(frozen=True, repr=False)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class Log(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class Sqrt(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class Compose(Expr):
    """``outer`` evaluated at ``inner``: the variable of ``outer`` is replaced."""

    outer: Expr
    inner: Expr


Z = Var()
for _cls in (Const, Var, Neg, Add, Sub, Mul, Div, PowInt, PowC, Exp, Log, Sqrt, Compose):
    _cls.__repr__ = lambda self: f"Expr({to_text(self)!r})"


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return parse_expression(x)
    return Const(complex(x))


def compose(outer: Expr, inner: Expr) -> Expr:
    return Compose(as_expr(outer), as_expr(inner))


def is_constant(e: Expr) -> bool:
    """True when ``e`` does not depend on ``z``."""
    if isinstance(e, Var):
        return False
    if isinstance(e, Const):
        return True
    if isinstance(e, Compose):
        return is_constant(e.outer) or is_constant(e.inner)
    return all(is_constant(c) for c in _children(e))


def _children(e: Expr) -> tuple:
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, PowInt):
        return (e.base,)
    if isinstance(e, (Neg, PowC, Exp, Log, Sqrt)):
        return (e.arg,)
    if isinstance(e, Compose):
        return (e.outer, e.inner)
    return ()


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[-+*/^()\[\]])
    )""",
    re.VERBOSE,
)

_FUNCS = {"exp": Exp, "log": Log, "sqrt": Sqrt}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                off = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ExprSyntaxError(f"unexpected character {text[off]!r}", off, text)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.i = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("eof", "", len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, op: str):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            found = "end of input" if kind == "eof" else repr(val)
            raise ExprSyntaxError(f"expected {op!r}, found {found}", off, self.text)
        self.i += 1

    def enter(self, off: int):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise DepthLimitExceeded(f"nesting deeper than {MAX_DEPTH}", off, self.text)

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                node = Add(node, rhs) if val == "+" else Sub(node, rhs)
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.factor()
                node = Mul(node, rhs) if val == "*" else Div(node, rhs)
            else:
                return node

    def factor(self) -> Expr:
        kind, val, off = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            self.enter(off)
            inner = self.factor()
            self.depth -= 1
            return Neg(inner) if val == "-" else inner
        node = self.atom()
        kind, val, off = self.peek()
        if kind == "op" and val == "^":
            self.take()
            node = PowInt(node, self.signed_int())
        return node

    def signed_int(self) -> int:
        sign = 1
        kind, val, off = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
            kind, val, off = self.peek()
        if kind != "num" or not val.isdigit():
            found = "end of input" if kind == "eof" else repr(val)
            raise ExprSyntaxError(f"expected integer exponent, found {found}", off, self.text)
        self.take()
        n = sign * int(val)
        if abs(n) > MAX_INT_POWER:
            raise ExprSyntaxError(f"integer power {n} exceeds {MAX_INT_POWER}", off, self.text)
        return n

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Const(complex(float(val)))
        if kind == "name":
            if val == "z":
                return Z
            if val == "i":
                return Const(1j)
            if val == "powc":
                self.expect("[")
                self.enter(off)
                c_expr = self.expr()
                self.depth -= 1
                self.expect("]")
                if not is_constant(c_expr):
                    raise ExprSyntaxError("powc exponent must not depend on z", off, self.text)
                c = complex(evaluate(c_expr, 0j))
                return PowC(c, self._call_args(off))
            if val in _FUNCS:
                return _FUNCS[val](self._call_args(off))
            raise UnknownFunction(f"unknown function or symbol {val!r}", off, self.text)
        if kind == "op" and val == "(":
            self.enter(off)
            node = self.expr()
            self.depth -= 1
            self.expect(")")
            return node
        found = "end of input" if kind == "eof" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", off, self.text)

    def _call_args(self, off: int) -> Expr:
        self.expect("(")
        self.enter(off)
        node = self.expr()
        self.depth -= 1
        self.expect(")")
        return node


def parse_expression(text: str) -> Expr:
    """Parse ``text`` into an :class:`Expr` tree."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text)
    if not text.isascii():
        bad = next(k for k, ch in enumerate(text) if not ch.isascii())
        raise ExprSyntaxError("non-ASCII character", len(text[:bad].encode()), text)
    p = _Parser(text)
    node = p.expr()
    kind, val, off = p.peek()
    if kind != "eof":
        raise ExprSyntaxError(f"unexpected {val!r}", off, text)
    return node


# ---------------------------------------------------------------------------
# printing


def _num(x: float) -> str:
    return repr(float(x))


def _const_text(c: complex) -> str:
    c = complex(c)
    if c == 1j:
        return "i"
    if c.imag == 0 and math.copysign(1.0, c.real) > 0:
        return _num(c.real)
    return _lit(c) if c.imag != 0 or c.real != 0 else "(-0.0)"


def to_text(e: Expr) -> str:
    """Fully parenthesised text that :func:`parse_expression` reads back."""
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return "z"
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, (Add, Sub, Mul, Div)):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        return f"({to_text(e.left)}{op}{to_text(e.right)})"
    if isinstance(e, PowInt):
        return f"({to_text(e.base)}^{e.n})"
    if isinstance(e, PowC):
        c = e.c
        if c.imag == 0:
            ctext = _num(c.real) if c.real >= 0 else f"-{_num(-c.real)}"
        elif c.real == 0:
            ctext = f"{'-' if c.imag < 0 else ''}{_num(abs(c.imag))}*i"
        else:
            ctext = _const_text(c)
        return f"powc[{ctext}]({to_text(e.arg)})"
    if isinstance(e, (Exp, Log, Sqrt)):
        name = {Exp: "exp", Log: "log", Sqrt: "sqrt"}[type(e)]
        return f"{name}({to_text(e.arg)})"
    if isinstance(e, Compose):
        return to_text(substitute(e.outer, e.inner))
    raise TypeError(f"not an expression node: {e!r}")


def substitute(e: Expr, inner: Expr) -> Expr:
    """Replace ``z`` in ``e`` by ``inner`` (structural, no Compose node)."""
    if isinstance(e, Var):
        return inner
    if isinstance(e, Const):
        return e
    if isinstance(e, Compose):
        return substitute(substitute(e.outer, e.inner), inner)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return type(e)(substitute(e.left, inner), substitute(e.right, inner))
    if isinstance(e, PowInt):
        return PowInt(substitute(e.base, inner), e.n)
    if isinstance(e, PowC):
        return PowC(e.c, substitute(e.arg, inner))
    return type(e)(substitute(e.arg, inner))


# ---------------------------------------------------------------------------
# evaluation


def eval_jet(e: Expr, z, strict: bool = True) -> Jet3:
    """Jet of ``e`` at ``z`` (scalar or array).

    With ``strict=False`` poles and branch-cut hits yield ``nan`` entries
    instead of raising.
    """
    return _jet(e, Jet3.variable(z), strict)


def _jet(e: Expr, x: Jet3, strict: bool) -> Jet3:
    if isinstance(e, Var):
        return x
    if isinstance(e, Const):
        return Jet3.const(e.value, like=x.f0)
    if isinstance(e, Compose):
        inner = _jet(e.inner, x, strict)
        outer = _jet(e.outer, Jet3.variable(inner.f0), strict)
        return jet_compose(outer, inner)
    try:
        if isinstance(e, Neg):
            return -_jet(e.arg, x, strict)
        if isinstance(e, (Add, Sub, Mul, Div)):
            kind = {Add: "add", Sub: "sub", Mul: "mul", Div: "div"}[type(e)]
            a = _jet(e.left, x, strict)
            b = _jet(e.right, x, strict)
            if kind == "div" and not np.ndim(b.f0) and abs(b.f0) < 1e-300:
                raise DivisionByZeroJet()
            return jet_arith(kind, a, b, strict)
        if isinstance(e, PowInt):
            return jet_pow_int(_jet(e.base, x, strict), e.n, strict)
        if isinstance(e, PowC):
            return jet_transcendental("powc", _jet(e.arg, x, strict), e.c, strict)
        kind = {Exp: "exp", Log: "log", Sqrt: "sqrt"}[type(e)]
        return jet_transcendental(kind, _jet(e.arg, x, strict), strict=strict)
    except (DivisionByZeroJet, BranchCutViolation) as exc:
        if exc.path is not None:
            raise
        raise type(exc)(path=to_text(e)) from None


def evaluate(e: Expr, z, strict: bool = True):
    """Value of ``e`` at ``z`` (scalar or array) without derivatives."""
    with np.errstate(all="ignore"):
        return _val(e, np.asarray(z, dtype=complex) if np.ndim(z) else complex(z), strict)


def _check(mask, strict, exc, e):
    if np.any(mask):
        if strict:
            raise type(exc)(path=to_text(e))
        return True
    return False


def _val(e: Expr, z, strict: bool):
    if isinstance(e, Var):
        return z
    if isinstance(e, Const):
        return e.value + 0 * z
    if isinstance(e, Compose):
        return _val(e.outer, _val(e.inner, z, strict), strict)
    if isinstance(e, Neg):
        return -_val(e.arg, z, strict)
    if isinstance(e, (Add, Sub, Mul)):
        a, b = _val(e.left, z, strict), _val(e.right, z, strict)
        return a + b if isinstance(e, Add) else a - b if isinstance(e, Sub) else a * b
    if isinstance(e, Div):
        a, b = _val(e.left, z, strict), _val(e.right, z, strict)
        bad = np.abs(b) < 1e-300
        if _check(bad, strict, DivisionByZeroJet(), e):
            b = np.where(bad, np.nan, b)
        return a / b
    if isinstance(e, PowInt):
        b = _val(e.base, z, strict)
        if e.n < 0:
            bad = np.abs(b) < 1e-300
            if _check(bad, strict, DivisionByZeroJet(), e):
                b = np.where(bad, np.nan, b)
        return b**e.n
    u = _val(e.arg, z, strict)
    if isinstance(e, Exp):
        return np.exp(u)
    bad = on_branch_cut(u)
    if _check(bad, strict, BranchCutViolation(), e):
        u = np.where(bad, np.nan, u)
    if not np.ndim(u):
        u = complex(u)
    if isinstance(e, Log):
        return np.log(u)
    if isinstance(e, Sqrt):
        return np.sqrt(u)
    return np.exp(e.c * np.log(u))


def evaluate_mp(e: Expr, z):
    """Value of ``e`` at an :mod:`mpmath` point, in the current working precision."""
    z = mpmath.mpc(z)
    return _mp(e, z)


def _mp(e: Expr, z):
    if isinstance(e, Var):
        return z
    if isinstance(e, Const):
        return mpmath.mpc(e.value)
    if isinstance(e, Compose):
        return _mp(e.outer, _mp(e.inner, z))
    if isinstance(e, Neg):
        return -_mp(e.arg, z)
    if isinstance(e, (Add, Sub, Mul, Div)):
        a, b = _mp(e.left, z), _mp(e.right, z)
        if isinstance(e, Add):
            return a + b
        if isinstance(e, Sub):
            return a - b
        if isinstance(e, Mul):
            return a * b
        if b == 0:
            raise DivisionByZeroJet(path=to_text(e))
        return a / b
    if isinstance(e, PowInt):
        b = _mp(e.base, z)
        if e.n < 0 and b == 0:
            raise DivisionByZeroJet(path=to_text(e))
        return b**e.n
    u = _mp(e.arg, z)
    if isinstance(e, Exp):
        return mpmath.exp(u)
    if mpmath.im(u) == 0 and mpmath.re(u) <= 0:
        raise BranchCutViolation(path=to_text(e))
    if isinstance(e, Log):
        return mpmath.log(u)
    if isinstance(e, Sqrt):
        return mpmath.sqrt(u)
    return mpmath.exp(mpmath.mpc(e.c) * mpmath.log(u))


class ExprFunction:
    """Callable wrapper: complex/array inputs use numpy, mpmath inputs use mpmath."""

    def __init__(self, e: Expr):
        self.expr = as_expr(e)

    def __call__(self, z):
        if isinstance(z, (mpmath.mpc, mpmath.mpf)):
            return evaluate_mp(self.expr, z)
        return evaluate(self.expr, z)


# ---------------------------------------------------------------------------
# fixture catalog


def _lit(x: complex) -> str:
    """Literal text for a constant, built from grammar pieces only."""
    x = complex(x)
    re_, im_ = x.real, x.imag
    parts = []
    if re_ != 0 or im_ == 0:
        parts.append(_num(re_) if re_ >= 0 else f"-{_num(-re_)}")
    if im_ != 0:
        mag = f"{_num(abs(im_))}*i"
        if parts:
            parts.append(("+" if im_ > 0 else "-") + mag)
        else:
            parts.append(mag if im_ > 0 else f"-{mag}")
    return "(" + "".join(parts) + ")"


def identity_text() -> str:
    return "z"


def moebius_text(a: complex, b: complex, c: complex, d: complex) -> str:
    if abs(complex(a) * complex(d) - complex(b) * complex(c)) < 1e-14:
        raise ValueError("degenerate Moebius coefficients (ad - bc = 0)")
    return f"({_lit(a)}*z+{_lit(b)})/({_lit(c)}*z+{_lit(d)})"


def koebe_text() -> str:
    return "z/(1-z)^2"


def nehari_text() -> str:
    return "0.5*log((1+z)/(1-z))"


def hille_text(eps: float) -> str:
    return f"powc[{_num(eps)}*i]((1-z)/(1+z))"


def polynomial_text(coeffs: Sequence[complex]) -> str:
    terms = []
    for k, c in enumerate(coeffs):
        if k == 0:
            terms.append(_lit(c))
        elif k == 1:
            terms.append(f"{_lit(c)}*z")
        else:
            terms.append(f"{_lit(c)}*z^{k}")
    return "+".join(terms) if terms else "0"


def zeps_text(eps: float) -> str:
    return f"z+{_lit(eps)}*z^2"


CATALOG_TEXTS: dict[str, str] = {
    "identity": identity_text(),
    "moebius": moebius_text(1, 0.25, -0.5j, 1),
    "moebius_disk": moebius_text(1, -(0.3 + 0.2j), -(0.3 - 0.2j), 1),
    "koebe": koebe_text(),
    "nehari_L": nehari_text(),
    "hille_0.5": hille_text(0.5),
    "hille_1": hille_text(1.0),
    "polynomial": polynomial_text([0.1, 1, 0.2 - 0.1j, 0.05]),
    "zeps_0.3": zeps_text(0.3),
    "exp_sqrt": "exp(0.5*z)*sqrt(2+z)",
}


def catalog() -> dict[str, Expr]:
    """Named fixture expressions (all analytic on the unit disk)."""
    return {name: parse_expression(text) for name, text in CATALOG_TEXTS.items()}
