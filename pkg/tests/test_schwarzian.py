from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_disk_points
from schwarzlab.errors import CriticalPoint, NotSensePreserving
from schwarzlab.expr_lang import eval_jet, moebius_text, parse_expression
from schwarzlab.harmonic import HarmonicMap
from schwarzlab.jet_core import Jet3, jet_compose
from schwarzlab.schwarzian import chain_rule_residual, pre_schwarzian, schwarzian_analytic, schwarzian_harmonic


def test_pre_schwarzian_examples(cat):
    assert pre_schwarzian(Jet3.variable(0.3)) == 0
    assert pre_schwarzian(eval_jet(cat["koebe"], 0)) == 4
    assert abs(pre_schwarzian(eval_jet(cat["nehari_L"], 0))) < 1e-15


def test_critical_point():
    with pytest.raises(CriticalPoint):
        schwarzian_analytic(Jet3(0, 0, 1, 0))


def test_schwarzian_examples(cat, rng):
    z = random_disk_points(rng, 200)
    for name in ("identity", "moebius", "moebius_disk"):
        assert np.max(np.abs(schwarzian_analytic(eval_jet(cat[name], z)))) < 1e-12
    assert schwarzian_analytic(eval_jet(cat["koebe"], 0)) == -6
    assert abs(schwarzian_analytic(eval_jet(cat["nehari_L"], 0)) - 2) < 1e-14


def test_closed_forms_along_disk(cat, rng):
    z = random_disk_points(rng, 200)
    assert np.allclose(schwarzian_analytic(eval_jet(cat["koebe"], z)), -6 / (1 - z**2) ** 2, rtol=1e-10)
    assert np.allclose(schwarzian_analytic(eval_jet(cat["nehari_L"], z)), 2 / (1 - z**2) ** 2, rtol=1e-10)
    for eps, name in ((0.5, "hille_0.5"), (1.0, "hille_1")):
        s = schwarzian_analytic(eval_jet(cat[name], z))
        assert np.allclose(s, 2 * (1 + eps**2) / (1 - z**2) ** 2, rtol=1e-9)


def test_harmonic_examples():
    h, g = parse_expression("z"), parse_expression("0.5*z^2")
    assert abs(schwarzian_harmonic(eval_jet(h, 0.5), eval_jet(g, 0.5)) + 2 / 3) < 1e-12
    assert schwarzian_harmonic(eval_jet(h, 0), eval_jet(g, 0)) == 0


def test_harmonic_reduces_to_analytic(cat, rng):
    z = random_disk_points(rng, 50)
    zero = Jet3.const(0, like=z)
    for e in cat.values():
        j = eval_jet(e, z)
        assert np.array_equal(schwarzian_harmonic(j, zero), schwarzian_analytic(j))


def test_not_sense_preserving():
    with pytest.raises(NotSensePreserving):
        schwarzian_harmonic(Jet3.variable(0.5), Jet3(0, 1, 0, 0))
    out = schwarzian_harmonic(Jet3.variable(np.array([0.1, 0.2])), Jet3(np.zeros(2), np.array([0.5, 1.0])), strict=False)
    assert np.isfinite(out[0]) and np.isnan(out[1])


def test_chain_rule_examples(cat, rng):
    koebe = HarmonicMap.analytic(cat["koebe"])
    assert chain_rule_residual(koebe, cat["moebius_disk"], 0.2 + 0.1j) < 1e-9
    f = HarmonicMap.from_text("z", "0.5*z^2")
    z = random_disk_points(rng, 50, 0.6)
    assert chain_rule_residual(f, cat["zeps_0.3"], z) < 1e-9
    assert chain_rule_residual(f, parse_expression("z"), z) == 0


def test_moebius_postcomposition(cat, rng):
    z = random_disk_points(rng, 30, 0.8)
    for _ in range(10):
        a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)
        m = parse_expression(moebius_text(a, b, c, d))
        for name in ("koebe", "nehari_L", "polynomial", "exp_sqrt"):
            inner = eval_jet(cat[name], z)
            if np.any(np.abs(c * inner.f0 + d) < 1e-3):
                continue
            comp = jet_compose(eval_jet(m, inner.f0), inner)
            assert np.max(np.abs(schwarzian_analytic(comp) - schwarzian_analytic(inner))) < 1e-9 * np.max(
                np.abs(schwarzian_analytic(inner))
            ) + 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7))
def test_continuity_in_g(x, y):
    z = complex(x, y) * 0.9
    h = eval_jet(parse_expression("z/(1-z)^2"), z)
    g = eval_jet(parse_expression("0.3*z^2+0.2*z^3"), z)
    base = schwarzian_analytic(h)
    errs = []
    for s in (1e-2, 1e-3, 1e-4):
        gs = Jet3(*(s * v for v in g.as_tuple()))
        errs.append(abs(schwarzian_harmonic(h, gs) - base))
    # at least linear: one decade in s buys at least one decade in the error
    assert errs[1] <= 0.105 * errs[0] + 1e-12
    assert errs[2] <= 0.105 * errs[1] + 1e-12
