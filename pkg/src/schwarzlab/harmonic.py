"""
Harmonic maps ``f = h + conj(g)`` and the map-level constructions built on
them: dilatation, Jacobian, affine transforms, hyperbolic derivative,
localisation to the unit disk and the generalised dilatation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import HyperbolicDomain, UnitDisk
from .errors import CoincidentArguments, DegenerateAffine, NotSensePreserving, OutsideDomain
from .expr_lang import Const, Expr, Z, as_expr, compose, eval_jet, evaluate, is_constant, to_text
from .jet_core import Jet3
from .schwarzian import SENSE_TOL, omega_jet, schwarzian_analytic, schwarzian_harmonic


@dataclass(frozen=True)
class HarmonicMap:
    """``f = h + conj(g)`` with analytic parts given as expressions."""

    h: Expr
    g: Expr
    z0: complex = 0j

    @classmethod
    def from_text(cls, h: str, g: str = "0", z0: complex = 0j) -> "HarmonicMap":
        return cls(as_expr(h), as_expr(g), complex(z0))

    @classmethod
    def analytic(cls, h, z0: complex = 0j) -> "HarmonicMap":
        return cls(as_expr(h), Const(0j), complex(z0))

    @property
    def is_analytic(self) -> bool:
        return is_constant(self.g)

    def __call__(self, z, strict: bool = True):
        return evaluate(self.h, z, strict) + np.conj(evaluate(self.g, z, strict))

    def jets(self, z, strict: bool = True) -> tuple[Jet3, Jet3]:
        return eval_jet(self.h, z, strict), eval_jet(self.g, z, strict)

    def dilatation(self, z, strict: bool = True):
        jh, jg = self.jets(z, strict)
        return omega_jet(jh, jg, strict)[0]

    def omega_jets(self, z, strict: bool = True):
        return omega_jet(*self.jets(z, strict), strict=strict)

    def jacobian(self, z):
        jh, jg = self.jets(z)
        return np.abs(jh.f1) ** 2 - np.abs(jg.f1) ** 2

    def schwarzian(self, z, strict: bool = True):
        return schwarzian_harmonic(*self.jets(z, strict), strict=strict)

    def schwarzian_h(self, z, strict: bool = True):
        return schwarzian_analytic(eval_jet(self.h, z, strict), strict)

    def is_normalized(self, tol: float = 1e-12) -> bool:
        """``h(z0) = g(z0) = 0`` and ``h'(z0) = 1``."""
        jh, jg = self.jets(self.z0)
        return abs(jh.f0) < tol and abs(jg.f0) < tol and abs(jh.f1 - 1) < tol

    def describe(self) -> dict:
        return {"h": to_text(self.h), "g": to_text(self.g), "z0": [self.z0.real, self.z0.imag]}


def dilatation(f: HarmonicMap, z):
    """``w = g'/h'``; the Jacobian is ``|h'|^2 - |g'|^2`` (see :meth:`HarmonicMap.jacobian`)."""
    return f.dilatation(z)


def affine_transform(f: HarmonicMap, a: complex) -> HarmonicMap:
    """``(f + a conj(f)) / (1 + a g'(z0))`` realised on the analytic parts.

    New analytic part ``(h + a g)/c``, co-analytic part ``(g + conj(a) h)/conj(c)``
    with ``c = 1 + a g'(z0)``.
    """
    a = complex(a)
    if abs(a) >= 1:
        raise ValueError("affine parameter must lie in the unit disk")
    c = 1 + a * eval_jet(f.g, f.z0).f1
    if abs(c) < 1e-12:
        raise DegenerateAffine("1 + a g'(z0) vanishes")
    h_new = (f.h + Const(a) * f.g) / Const(c)
    g_new = (f.g + Const(a.conjugate()) * f.h) / Const(c.conjugate())
    return HarmonicMap(h_new, g_new, f.z0)


def hyperbolic_derivative(source, domain: HyperbolicDomain, z, strict: bool = True):
    """``w*(z) = w'(z) / (lambda(z) (1 - |w(z)|^2))``.

    ``source`` is a :class:`HarmonicMap` (its dilatation is used) or an
    analytic self-map of the disk given as an expression.
    """
    if not np.all(domain.contains(z)):
        raise OutsideDomain("hyperbolic derivative requested outside the domain")
    if isinstance(source, HarmonicMap):
        w, w1, _ = source.omega_jets(z, strict)
    else:
        j = eval_jet(as_expr(source), z, strict)
        w, w1 = j.f0, j.f1
    bad = ~(np.abs(w) < 1 - SENSE_TOL)
    if np.any(bad):
        if strict:
            raise NotSensePreserving("|w| must stay below 1")
        w = np.where(bad, np.nan, w)
    lam = domain.density(z)
    with np.errstate(all="ignore"):
        return w1 / (lam * (1 - np.abs(w) ** 2))


def localize_to_disk(f: HarmonicMap, domain: HyperbolicDomain, alpha: complex) -> tuple[HarmonicMap, float]:
    """Blow up the largest disk around ``alpha`` to the unit disk.

    Returns ``(F, r)`` with ``r = d(alpha)`` and
    ``F(s) = (f(alpha + r s) - f(alpha)) / (r h'(alpha))``.
    """
    alpha = complex(alpha)
    if not domain.contains(alpha):
        raise OutsideDomain(f"{alpha} is outside {domain.spec()}")
    r = float(domain.boundary_distance(alpha))
    jh, jg = f.jets(alpha)
    scale = r * jh.f1
    inner = Const(alpha) + Const(r) * Z
    h_new = (compose(f.h, inner) - Const(jh.f0)) / Const(scale)
    g_new = (compose(f.g, inner) - Const(jg.f0)) / Const(scale.conjugate())
    return HarmonicMap(h_new, g_new, 0j), r


def generalized_dilatation(f: HarmonicMap, alpha: complex, z, near: float = 1e-4):
    """``(g(z) - g(alpha)) / (h(z) - h(alpha))``, continued by ``w(alpha)`` at ``z = alpha``.

    Within ``near`` of ``alpha`` the second-order jet quotient is used to avoid
    0/0 cancellation.
    """
    alpha = complex(alpha)
    scalar = not np.ndim(z)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    jh, jg = f.jets(alpha)
    dz = z - alpha
    close = np.abs(dz) < near
    with np.errstate(all="ignore"):
        dh = evaluate(f.h, z) - jh.f0
        dg = evaluate(f.g, z) - jg.f0
        far_val = dg / dh
        near_val = (jg.f1 + jg.f2 * dz / 2) / (jh.f1 + jh.f2 * dz / 2)
    if np.any(~close & (np.abs(dh) < 1e-14 * np.maximum(1, np.abs(jh.f0)))):
        raise CoincidentArguments("h takes equal values at distinct points: h is not univalent")
    out = np.where(close, near_val, far_val)
    return complex(out[0]) if scalar else out


def rotation_residual(f: HarmonicMap, z1: complex, z2: complex) -> float:
    """Injectivity argument: if ``f(z1) = f(z2)`` then ``h + e^{2 i t} g`` collides too.

    ``t = arg(h(z1) - h(z2))``; returns ``|(h + e^{2it} g)(z1) - (h + e^{2it} g)(z2)|``.
    """
    h1, h2 = evaluate(f.h, z1), evaluate(f.h, z2)
    g1, g2 = evaluate(f.g, z1), evaluate(f.g, z2)
    rot = np.exp(2j * np.angle(h1 - h2))
    return float(abs((h1 + rot * g1) - (h2 + rot * g2)))


def in_class_F(f: HarmonicMap, domain: HyperbolicDomain, t: float, n: int = 32, zero_dilatation: bool = False) -> bool:
    """Membership in the normalised class ``F_t`` (or ``F_t^0``) as far as a grid can tell.

    Checks normalisation at ``z0``, sense preservation on the grid and a grid
    estimate of the Schwarzian norm against ``t``.
    """
    from .norms import schwarzian_norm

    if not f.is_normalized():
        return False
    if zero_dilatation and abs(f.dilatation(f.z0)) > 1e-12:
        return False
    pts = domain.sample(n)
    w = f.dilatation(pts, strict=False)
    if not np.all(np.abs(w) < 1):
        return False
    return schwarzian_norm(f, domain, n).estimate <= t


__all__ = [
    "HarmonicMap",
    "affine_transform",
    "dilatation",
    "generalized_dilatation",
    "hyperbolic_derivative",
    "in_class_F",
    "localize_to_disk",
    "rotation_residual",
]
