from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_disk_points
from schwarzlab.domains import ConformalQuasidisk, UnitDisk
from schwarzlab.errors import CoincidentArguments, DegenerateAffine, NotSensePreserving, OutsideDomain
from schwarzlab.expr_lang import parse_expression
from schwarzlab.harmonic import (
    HarmonicMap,
    affine_transform,
    dilatation,
    generalized_dilatation,
    hyperbolic_derivative,
    in_class_F,
    localize_to_disk,
    rotation_residual,
)

FIXTURES = [
    HarmonicMap.from_text("z", "0.5*z^2"),
    HarmonicMap.from_text("z/(1-z)^2", "0.3*z/(1-z)^2"),
    HarmonicMap.from_text("z+0.2*z^2", "0.1*z^2+0.05*z^3"),
    HarmonicMap.from_text("exp(0.5*z)*sqrt(2+z)", "0.2*z^2"),
]


def test_dilatation_examples():
    assert dilatation(FIXTURES[0], 0.5) == 0.5
    assert np.all(dilatation(HarmonicMap.from_text("z/(1-z)^2"), np.array([0.1, 0.4j])) == 0)
    z = np.array([0.1, 0.3 + 0.4j, -0.6j])
    assert np.allclose(dilatation(FIXTURES[1], z), 0.3, atol=1e-15)


def test_evaluation_and_jacobian():
    f = FIXTURES[0]
    z = 0.3 + 0.2j
    assert f(z) == pytest.approx(z + np.conj(0.5 * z * z))
    assert f.jacobian(z) == pytest.approx(1 - abs(z) ** 2)


@pytest.mark.parametrize("f", FIXTURES)
def test_affine_identity(f, rng):
    a = 0.3 - 0.4j
    big_f = affine_transform(f, a)
    z = random_disk_points(rng, 20, 0.8)
    jg0 = f.jets(f.z0)[1].f1
    c = 1 + a * jg0
    expected = (f(z) + a * np.conj(f(z))) / c
    assert np.max(np.abs(big_f(z) - expected)) < 1e-12


def test_affine_zero_is_identity(rng):
    f = FIXTURES[2]
    z = random_disk_points(rng, 10)
    assert np.allclose(affine_transform(f, 0)(z), f(z), atol=1e-15)


def test_affine_kills_dilatation_at_base_point():
    f = HarmonicMap.from_text("z+0.2*z^2", "0.3*z+0.1*z^2")
    w0 = f.dilatation(0)
    big_f = affine_transform(f, -np.conj(w0))
    assert abs(big_f.dilatation(0)) < 1e-15


def test_affine_errors():
    with pytest.raises(ValueError):
        affine_transform(FIXTURES[0], 1.0)


def test_degenerate_affine():
    # 1 + a g'(z0) = 0 needs |g'(z0)| > 1 with a in the disk
    f = HarmonicMap.from_text("z", "2*z")
    with pytest.raises(DegenerateAffine):
        affine_transform(f, -0.5)


@pytest.mark.parametrize("f", FIXTURES)
def test_affine_invariance_of_schwarzian(f, rng):
    z = random_disk_points(rng, 50, 0.8)
    for a in (0.5, -0.3 + 0.6j):
        big_f = affine_transform(f, a)
        assert np.max(np.abs(big_f.schwarzian(z) - f.schwarzian(z))) < 1e-9
        d = UnitDisk()
        lhs = np.abs(hyperbolic_derivative(big_f, d, z))
        rhs = np.abs(hyperbolic_derivative(f, d, z))
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_hyperbolic_derivative_examples(rng):
    d = UnitDisk()
    z = random_disk_points(rng, 100, 0.99)
    assert np.allclose(hyperbolic_derivative(parse_expression("z"), d, z), 1, atol=1e-12)
    assert np.all(hyperbolic_derivative(parse_expression("0.3+0.1*i"), d, z) == 0)
    for text in ("z^2", "(z-0.5)/(1-0.5*z)", "0.5*exp(z-1)", "z*(z+0.5)/(1+0.5*z)"):
        assert np.max(np.abs(hyperbolic_derivative(parse_expression(text), d, z))) <= 1 + 1e-9


def test_hyperbolic_derivative_errors():
    with pytest.raises(OutsideDomain):
        hyperbolic_derivative(parse_expression("z"), UnitDisk(), 1.2)
    with pytest.raises(NotSensePreserving):
        hyperbolic_derivative(parse_expression("2*z"), UnitDisk(), 0.6)


def test_localize_identity_case():
    f = FIXTURES[2]
    big_f, r = localize_to_disk(f, UnitDisk(), 0)
    assert r == 1
    z = np.array([0.1, 0.5j, -0.7])
    assert np.allclose(big_f(z), f(z), atol=1e-15)


@pytest.mark.parametrize("domain", [UnitDisk(), ConformalQuasidisk(parse_expression("z+0.3*z^2"))])
def test_localization_relation(domain, rng):
    f = HarmonicMap.from_text("z+0.1*z^2", "0.2*z^2")
    alphas = domain.random_points(20, rng, 0.9)
    for alpha in alphas:
        big_f, r = localize_to_disk(f, domain, alpha)
        lam = domain.density(alpha)
        lhs = abs(hyperbolic_derivative(big_f, UnitDisk(), 0))
        rhs = r * lam * abs(hyperbolic_derivative(f, domain, alpha))
        assert abs(lhs - rhs) < 1e-8
        assert abs(big_f.dilatation(0)) == pytest.approx(abs(f.dilatation(alpha)), abs=1e-14)
        assert abs(hyperbolic_derivative(f, domain, alpha)) <= 4 * lhs + 1e-12


def test_generalized_dilatation():
    f = FIXTURES[0]
    assert generalized_dilatation(f, 0, 0.5) == pytest.approx(0.25)
    z = np.array([0.3, 0.3 + 1e-9, 0.3 + 1e-7j, 0.31])
    psi = generalized_dilatation(f, 0.3, z)
    assert abs(psi[0] - f.dilatation(0.3)) < 1e-15
    assert np.max(np.abs(psi[1:3] - f.dilatation(0.3))) < 1e-6
    # smooth across the switch between the jet limit and the quotient
    assert abs(generalized_dilatation(f, 0.3, 0.3 + 0.99e-4) - generalized_dilatation(f, 0.3, 0.3 + 1.01e-4)) < 1e-5


def test_generalized_dilatation_noninjective_h():
    f = HarmonicMap.from_text("z^2", "0")
    with pytest.raises(CoincidentArguments):
        generalized_dilatation(f, 0.5, -0.5)


def test_rotation_residual_on_collision():
    f = HarmonicMap.analytic(parse_expression("powc[1*i]((1-z)/(1+z))"))
    assert rotation_residual(f, 0, -np.tanh(np.pi)) < 1e-12


def test_in_class_F():
    d = UnitDisk()
    f = HarmonicMap.from_text("z", "0.5*z^2")
    assert in_class_F(f, d, 1.6, n=16)
    assert not in_class_F(f, d, 1.0, n=16)
    assert in_class_F(f, d, 1.6, n=16, zero_dilatation=True)
    assert not in_class_F(HarmonicMap.from_text("1+z", "0"), d, 10)
    assert not in_class_F(HarmonicMap.from_text("z", "0.5+0.5*z^2"), d, 10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 2 * np.pi), st.floats(0, 0.9), st.floats(0, 2 * np.pi))
def test_affine_invariance_property(r, t, ar, at):
    f = FIXTURES[3]
    z = r * np.exp(1j * t)
    a = ar * np.exp(1j * at)
    big_f = affine_transform(f, a)
    assert abs(big_f.schwarzian(z) - f.schwarzian(z)) < 1e-9 * max(1, abs(f.schwarzian(z)))


def test_jacobian_positive_on_samples():
    for f in FIXTURES:
        z = UnitDisk().sample(16)
        assert np.all(f.jacobian(z) > 0)
