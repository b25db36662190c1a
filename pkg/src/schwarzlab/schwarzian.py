"""Pre-Schwarzian, Schwarzian and harmonic Schwarzian on jets."""

from __future__ import annotations

import numpy as np

from .errors import CriticalPoint, NotSensePreserving
from .expr_lang import Expr, as_expr, eval_jet
from .jet_core import Jet3, jet_compose

SENSE_TOL = 1e-12


def _guard_critical(f1, strict: bool):
    bad = np.abs(f1) < 1e-300
    if np.any(bad):
        if strict:
            raise CriticalPoint("derivative vanishes (locally non-univalent point)")
        f1 = np.where(bad, np.nan, f1)
    return f1


def pre_schwarzian(j: Jet3, strict: bool = True):
    """``f''/f'``."""
    f1 = _guard_critical(j.f1, strict)
    with np.errstate(all="ignore"):
        return j.f2 / f1


def schwarzian_analytic(j: Jet3, strict: bool = True):
    """``Sf = f'''/f' - (3/2) (f''/f')**2``."""
    f1 = _guard_critical(j.f1, strict)
    with np.errstate(all="ignore"):
        p = j.f2 / f1
        return j.f3 / f1 - 1.5 * p * p


def omega_jet(h: Jet3, g: Jet3, strict: bool = True):
    """Dilatation ``w = g'/h'`` and its first two derivatives from the jets of h and g."""
    h1 = _guard_critical(h.f1, strict)
    with np.errstate(all="ignore"):
        w = g.f1 / h1
        w1 = (g.f2 - w * h.f2) / h1
        w2 = (g.f3 - 2 * w1 * h.f2 - w * h.f3) / h1
    return w, w1, w2


def _guard_sense(w, strict: bool):
    bad = ~(np.abs(w) < 1 - SENSE_TOL)
    if np.any(bad):
        if strict:
            raise NotSensePreserving(f"|dilatation| = {np.max(np.abs(w)):.6g} is not below 1")
        w = np.where(bad, np.nan, w)
    return w


def schwarzian_harmonic(h: Jet3, g: Jet3, strict: bool = True):
    """Schwarzian of the sense-preserving harmonic map ``h + conj(g)``.

    ``S_f = Sh + conj(w)/(1-|w|^2) * ((h''/h') w' - w'') - 3/2 (w' conj(w)/(1-|w|^2))^2``
    with ``w = g'/h'``. Reduces to :func:`schwarzian_analytic` when ``g' = 0``.
    """
    sh = schwarzian_analytic(h, strict)
    w, w1, w2 = omega_jet(h, g, strict)
    w = _guard_sense(w, strict)
    with np.errstate(all="ignore"):
        wc = np.conj(w) / (1 - np.abs(w) ** 2)
        return sh + wc * ((h.f2 / h.f1) * w1 - w2) - 1.5 * (w1 * wc) ** 2


def composed_jets(h: Expr, g: Expr, phi: Expr, z, strict: bool = True):
    """Jets of ``h o phi`` and ``g o phi`` at ``z`` plus the jet of ``phi``."""
    jp = eval_jet(as_expr(phi), z, strict)
    jh = jet_compose(eval_jet(as_expr(h), jp.f0, strict), jp)
    jg = jet_compose(eval_jet(as_expr(g), jp.f0, strict), jp)
    return jh, jg, jp


def chain_rule_residual(f, phi, z) -> float:
    """``|S_{f o phi}(z) - (S_f(phi(z)) phi'(z)**2 + S phi(z))|``.

    ``f`` is a :class:`~schwarzlab.harmonic.HarmonicMap` (or anything with
    ``h``/``g`` expression attributes). The left side comes from composed
    jets, the right side from separate evaluations.
    """
    phi = as_expr(phi)
    jh, jg, jp = composed_jets(f.h, f.g, phi, z)
    lhs = schwarzian_harmonic(jh, jg)
    w = jp.f0
    rhs = schwarzian_harmonic(eval_jet(f.h, w), eval_jet(f.g, w)) * jp.f1**2 + schwarzian_analytic(jp)
    return float(np.max(np.abs(lhs - rhs)))
