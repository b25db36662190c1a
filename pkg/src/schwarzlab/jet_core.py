"""
Degree-3 truncated Taylor arithmetic for analytic functions.

A :class:`Jet3` stores ``(f, f', f'', f''')`` at a point. Entries may be
Python complex scalars or numpy complex arrays of a common shape, so a whole
sampling grid can be pushed through an expression in one pass.

Every operation comes in a *strict* flavour (the default) that raises on a
pole or branch-cut hit anywhere in the input, and a lenient flavour
(``strict=False``) that writes ``nan`` into the offending entries instead, which
is what the grid-based estimators use to skip bad points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import mpmath
import numpy as np

from .errors import BranchCutViolation, DivisionByZeroJet, StencilOutsideDomain

Scalar = Union[complex, np.ndarray]

_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class Jet3:
    """Value and first three complex derivatives of an analytic function."""

    f0: Scalar
    f1: Scalar = 0j
    f2: Scalar = 0j
    f3: Scalar = 0j

    @classmethod
    def const(cls, c, like=None) -> "Jet3":
        if like is not None and np.ndim(like):
            c = np.full(np.shape(like), c, dtype=complex)
            z = np.zeros(np.shape(like), dtype=complex)
            return cls(c, z, z, z)
        return cls(complex(c), 0j, 0j, 0j)

    @classmethod
    def variable(cls, z) -> "Jet3":
        """Jet of the identity function at ``z``: ``(z, 1, 0, 0)``."""
        if np.ndim(z):
            z = np.asarray(z, dtype=complex)
            return cls(z, np.ones_like(z), np.zeros_like(z), np.zeros_like(z))
        return cls(complex(z), 1 + 0j, 0j, 0j)

    def as_tuple(self) -> tuple:
        return (self.f0, self.f1, self.f2, self.f3)

    def is_finite(self) -> bool:
        return bool(all(np.all(np.isfinite(e)) for e in self.as_tuple()))

    def __getitem__(self, idx) -> "Jet3":
        return Jet3(*(np.asarray(e)[idx] for e in self.as_tuple()))

    def __neg__(self) -> "Jet3":
        return Jet3(-self.f0, -self.f1, -self.f2, -self.f3)

    def __add__(self, other) -> "Jet3":
        return jet_arith("add", self, _lift(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Jet3":
        return jet_arith("sub", self, _lift(other))

    def __rsub__(self, other) -> "Jet3":
        return jet_arith("sub", _lift(other), self)

    def __mul__(self, other) -> "Jet3":
        return jet_arith("mul", self, _lift(other))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet3":
        return jet_arith("div", self, _lift(other))

    def __rtruediv__(self, other) -> "Jet3":
        return jet_arith("div", _lift(other), self)

    def __repr__(self) -> str:
        return f"Jet3({self.f0!r}, {self.f1!r}, {self.f2!r}, {self.f3!r})"


def _lift(x) -> Jet3:
    return x if isinstance(x, Jet3) else Jet3.const(x)


def _bad_mask(mask, strict: bool, exc: Exception):
    if np.any(mask):
        if strict:
            raise exc
        return True
    return False


def _scale(a: Jet3, c) -> Jet3:
    return Jet3(a.f0 * c, a.f1 * c, a.f2 * c, a.f3 * c)


def jet_arith(kind: str, a: Jet3, b: Jet3, strict: bool = True) -> Jet3:
    """Combine two jets with ``add``, ``sub``, ``mul`` or ``div``."""
    if kind == "add":
        return Jet3(a.f0 + b.f0, a.f1 + b.f1, a.f2 + b.f2, a.f3 + b.f3)
    if kind == "sub":
        return Jet3(a.f0 - b.f0, a.f1 - b.f1, a.f2 - b.f2, a.f3 - b.f3)
    if kind == "mul":
        return Jet3(
            a.f0 * b.f0,
            a.f1 * b.f0 + a.f0 * b.f1,
            a.f2 * b.f0 + 2 * a.f1 * b.f1 + a.f0 * b.f2,
            a.f3 * b.f0 + 3 * a.f2 * b.f1 + 3 * a.f1 * b.f2 + a.f0 * b.f3,
        )
    if kind == "div":
        return jet_arith("mul", a, _reciprocal(b, strict), strict)
    raise ValueError(f"unknown jet operation {kind!r}")


def _reciprocal(b: Jet3, strict: bool) -> Jet3:
    b0 = b.f0
    bad = np.abs(b0) < _TINY
    if _bad_mask(bad, strict, DivisionByZeroJet()):
        b0 = np.where(bad, np.nan, b0)
    with np.errstate(all="ignore"):
        r = 1 / b0
        outer = Jet3(r, -r**2, 2 * r**3, -6 * r**4)
    return jet_compose(outer, b)


def jet_compose(outer: Jet3, inner: Jet3) -> Jet3:
    """Faa di Bruno to third order; ``outer`` must be the jet of g at ``inner.f0``."""
    g0, g1, g2, g3 = outer.as_tuple()
    _, h1, h2, h3 = inner.as_tuple()
    return Jet3(
        g0,
        g1 * h1,
        g2 * h1**2 + g1 * h2,
        g3 * h1**3 + 3 * g2 * h1 * h2 + g1 * h3,
    )


def on_branch_cut(w) -> np.ndarray | bool:
    """True where ``w`` lies on the closed negative real axis."""
    w = np.asarray(w, dtype=complex)
    return (w.imag == 0) & (w.real <= 0)


def jet_transcendental(kind: str, a: Jet3, c: complex | None = None, strict: bool = True) -> Jet3:
    """Apply ``exp``, ``log``, ``sqrt`` or ``powc`` (principal branches) to a jet.

    ``powc`` raises the represented function to the complex power ``c``.
    """
    u = a.f0
    if kind == "exp":
        e = np.exp(u)
        return jet_compose(Jet3(e, e, e, e), a)
    if kind not in ("log", "sqrt", "powc"):
        raise ValueError(f"unknown transcendental {kind!r}")

    bad = on_branch_cut(u)
    if _bad_mask(bad, strict, BranchCutViolation()):
        u = np.where(bad, np.nan, u)
    if not np.ndim(u):
        u = complex(u)
    with np.errstate(all="ignore"):
        if kind == "log":
            r = 1 / u
            outer = Jet3(np.log(u), r, -r**2, 2 * r**3)
        elif kind == "sqrt":
            s = np.sqrt(u)
            outer = Jet3(s, 0.5 / s, -0.25 / s**3, 0.375 / s**5)
        else:
            if c is None:
                raise ValueError("powc needs an exponent")
            c = complex(c)
            lu = np.log(u)
            outer = Jet3(
                np.exp(c * lu),
                c * np.exp((c - 1) * lu),
                c * (c - 1) * np.exp((c - 2) * lu),
                c * (c - 1) * (c - 2) * np.exp((c - 3) * lu),
            )
    return jet_compose(outer, a)


def jet_pow_int(a: Jet3, n: int, strict: bool = True) -> Jet3:
    """Integer power; branch free, only ``n < 0`` at a zero value is an error."""
    u = a.f0
    if n < 0:
        bad = np.abs(u) < _TINY
        if _bad_mask(bad, strict, DivisionByZeroJet("negative power of a vanishing jet")):
            u = np.where(bad, np.nan, u)
    coeffs = [1, n, n * (n - 1), n * (n - 1) * (n - 2)]
    entries = []
    with np.errstate(all="ignore"):
        for k, c in enumerate(coeffs):
            if c == 0:
                entries.append(u * 0)
            else:
                entries.append(c * u ** (n - k))
    return jet_compose(Jet3(*entries), a)


def _fd_eval(f: Callable, pts: list, dps: int):
    try:
        with mpmath.workdps(dps):
            return [mpmath.mpc(f(mpmath.mpc(p))) for p in pts], True
    except TypeError:
        return [complex(f(complex(p))) for p in pts], False


def finite_difference_jet(
    f: Callable,
    z: complex,
    h: float = 1e-5,
    domain: Callable[[complex], bool] | None = None,
    dps: int = 50,
) -> Jet3:
    """Estimate ``(f, f', f'', f''')`` at ``z`` from the four-point complex stencil.

    The stencil is ``z + h * i**k`` for ``k = 0..3``; for analytic ``f`` the
    discrete Fourier coefficients of the samples give every entry with an
    ``O(h**4)`` truncation error. If ``f`` accepts :mod:`mpmath` numbers the
    samples are taken at ``dps`` decimal digits, which removes the ``eps / h**3``
    cancellation that would otherwise swamp the third derivative; plain
    callables fall back to double precision.
    """
    if not (1e-6 <= h <= 1e-3):
        raise ValueError("finite-difference step must lie in [1e-6, 1e-3]")
    z = complex(z)
    units = [1, 1j, -1, -1j]
    pts = [z + h * u for u in units]
    if domain is not None and not all(domain(p) for p in pts):
        raise StencilOutsideDomain(f"stencil of radius {h} around {z} leaves the domain")
    with mpmath.workdps(dps):
        zm = mpmath.mpc(z)
        hm = mpmath.mpf(h)
        mp_units = [mpmath.mpc(1), mpmath.mpc(0, 1), mpmath.mpc(-1), mpmath.mpc(0, -1)]
        vals, used_mp = _fd_eval(lambda p: f(p), [zm + hm * u for u in mp_units], dps)
        if not used_mp:
            vals = [mpmath.mpc(v) for v in vals]
        out = []
        for n in range(4):
            acc = mpmath.mpc(0)
            for k in range(4):
                acc += vals[k] * mp_units[k] ** (-n)
            out.append(complex(acc * math.factorial(n) / (4 * hm**n)))
    return Jet3(*out)


def jet_relative_error(a: Jet3, b: Jet3) -> float:
    """Largest entry difference scaled by ``max(1, largest |entry| of a)``."""
    scale = max(1.0, max(float(np.max(np.abs(e))) for e in a.as_tuple()))
    return max(float(np.max(np.abs(x - y))) for x, y in zip(a.as_tuple(), b.as_tuple())) / scale
