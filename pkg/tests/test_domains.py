from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import random_disk_points
from schwarzlab.errors import NewtonDiverged, OutsideDomain
from schwarzlab.expr_lang import eval_jet, evaluate, parse_expression, substitute
from schwarzlab.domains import Annulus, ConformalQuasidisk, HalfPlane, UnitDisk, disk_density, parse_domain
from schwarzlab.schwarzian import schwarzian_analytic


@pytest.fixture(scope="module")
def zeps():
    return ConformalQuasidisk(parse_expression("z+0.3*z^2"))


def test_density_examples():
    assert UnitDisk().density(0) == 1
    assert HalfPlane().density(1j) == 0.5
    a = Annulus(math.exp(-math.pi))
    assert a.density(math.exp(-math.pi / 2)) == pytest.approx(math.exp(math.pi / 2) / 2, rel=1e-14)


def test_halfplane_matches_cayley_transfer(rng):
    u = random_disk_points(rng, 100)
    hp = HalfPlane()
    z = hp.chart(u)
    # z = i (1+u)/(1-u), dz/du = 2i/(1-u)^2
    oracle = disk_density(u) / np.abs(2 / (1 - u) ** 2)
    assert np.allclose(hp.density(z), oracle, rtol=1e-12)


def test_annulus_matches_covering_oracle(rng):
    rho = 0.2
    a = Annulus(rho)
    c = math.log(1 / rho) / math.pi
    z = a.random_points(100, rng)
    # strip 0 < Im w < pi covers the annulus by z = exp(i c w); the disk covers the strip by u = tanh((w - i pi/2)/2)
    w = np.log(z) / (1j * c)
    assert np.all((w.imag > 0) & (w.imag < np.pi))
    u = np.tanh((w - 1j * np.pi / 2) / 2)
    dz_du = 1j * c * z * 2 / (1 - u**2)
    oracle = disk_density(u) / np.abs(dz_du)
    assert np.max(np.abs(a.density(z) - oracle) / oracle) < 1e-9


def test_boundary_distance_examples(zeps):
    assert UnitDisk().boundary_distance(0.5) == 0.5
    assert Annulus(0.25).boundary_distance(0.5) == 0.25
    t = np.linspace(0, 2 * np.pi, 1_000_000, endpoint=False)
    brute = np.min(np.abs(evaluate(zeps.phi, np.exp(1j * t))))
    assert abs(zeps.boundary_distance(0j) - brute) < 1e-5


def test_boundary_distance_random_points(zeps, rng):
    z = zeps.random_points(20, rng)
    t = np.linspace(0, 2 * np.pi, 200_000, endpoint=False)
    bz = evaluate(zeps.phi, np.exp(1j * t))
    brute = np.min(np.abs(z[:, None] - bz[None, :]), axis=1)
    d = zeps.boundary_distance(z)
    assert np.all(d <= brute + 1e-12)
    assert np.max(np.abs(d - brute) / brute) < 1e-6


def test_koebe_margin_examples():
    assert UnitDisk().koebe_margin(0) == 1
    assert UnitDisk().koebe_margin(0.5) == pytest.approx(2 / 3)
    assert HalfPlane().koebe_margin(1j) == 0.5
    with pytest.raises(ValueError):
        Annulus(0.5).koebe_margin(0.7)


def test_outside_domain():
    with pytest.raises(OutsideDomain):
        UnitDisk().density(1.5)
    with pytest.raises(OutsideDomain):
        HalfPlane().boundary_distance(-1j)
    with pytest.raises(OutsideDomain):
        Annulus(0.5).density(0.1)


def test_invert_riemann(zeps, rng):
    ident = ConformalQuasidisk(parse_expression("z"))
    assert abs(ident.invert_riemann(0.3 + 0.1j) - (0.3 + 0.1j)) < 1e-15
    w = zeps.chart(random_disk_points(rng, 100, 0.99))
    assert np.max(np.abs(evaluate(zeps.phi, zeps.invert_riemann(w)) - w)) < 1e-12
    target = evaluate(zeps.phi, 0.5)
    closed = (-1 + np.sqrt(1 + 4 * 0.3 * target)) / (2 * 0.3)
    got = zeps.invert_riemann(target)
    assert abs(got - 0.5) < 1e-12 and abs(got - closed) < 1e-12


def test_invert_riemann_diverges_far_away(zeps):
    with pytest.raises(NewtonDiverged):
        zeps.invert_riemann(100.0)
    assert np.isnan(zeps.invert_riemann(np.array([100.0]), strict=False)[0])


def test_contains_and_density(zeps):
    assert zeps.contains(0.5) and not zeps.contains(1.5)
    w = np.array([0.2, 0.5j, -0.7])
    z = evaluate(zeps.phi, w)
    assert np.allclose(zeps.density(z), disk_density(w) / np.abs(eval_jet(zeps.phi, w).f1))


def test_riemann_transfer_identity(zeps, rng):
    f = parse_expression("z+0.1*z^3")
    big_f = substitute(f, zeps.phi)
    w = random_disk_points(rng, 50, 0.95)
    lhs = np.abs(schwarzian_analytic(eval_jet(big_f, w)) - schwarzian_analytic(eval_jet(zeps.phi, w))) / disk_density(w) ** 2
    z = evaluate(zeps.phi, w)
    rhs = np.abs(schwarzian_analytic(eval_jet(f, z))) / zeps.density(z) ** 2
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_domain_monotonicity(rng):
    small = ConformalQuasidisk(parse_expression("0.7*z"))
    z = random_disk_points(rng, 100, 0.69)
    assert np.all(small.density(z) >= UnitDisk().density(z))


@pytest.mark.parametrize("dom", [UnitDisk(), HalfPlane(), Annulus(0.3)])
def test_grids_inside(dom):
    g = dom.reference_grid(16)
    assert np.all(dom.contains(dom.chart(g.u)))
    assert np.all(dom.reference_contains(g.u))
    assert g.ring.max() == g.n_rings - 1


def test_parse_domain():
    assert isinstance(parse_domain("disk"), UnitDisk)
    assert isinstance(parse_domain("halfplane"), HalfPlane)
    assert parse_domain("annulus:0.25").rho == 0.25
    q = parse_domain("quasidisk:z+0.3*z^2")
    assert parse_domain(q.spec()).phi == q.phi
    with pytest.raises(ValueError):
        parse_domain("square")
    with pytest.raises(ValueError):
        parse_domain("annulus:1.5")
