from __future__ import annotations

import math

import numpy as np
import pytest

from schwarzlab.domains import Annulus, ConformalQuasidisk, HalfPlane, UnitDisk
from schwarzlab.expr_lang import eval_jet, parse_expression, substitute
from schwarzlab.harmonic import HarmonicMap, affine_transform
from schwarzlab.norms import (
    extended_affine_audit,
    hyperbolic_norm,
    inequality_audit,
    psi_bound_audit,
    schwarzian_norm,
    univalence_scan,
)
from schwarzlab.schwarzian import schwarzian_analytic

DISK = UnitDisk()
HALF = HarmonicMap.from_text("z", "0.5*z^2")


@pytest.fixture(scope="module")
def zeps():
    return ConformalQuasidisk(parse_expression("z+0.3*z^2"))


def test_moebius_norm_zero(cat):
    rep = schwarzian_norm(cat["moebius"], DISK, 32)
    assert rep.estimate < 1e-12


def test_nehari_and_koebe_norms(cat):
    assert abs(schwarzian_norm(cat["nehari_L"], DISK, 64).estimate - 2) < 1e-3
    assert abs(schwarzian_norm(cat["koebe"], DISK, 64).estimate - 6) < 1e-3


def test_harmonic_norm_and_boundary_flag():
    rep = schwarzian_norm(HALF, DISK, 64)
    assert abs(rep.estimate - 1.5) < 1e-2
    assert rep.estimate <= 1.5
    assert rep.flags["sup_on_boundary"]


def test_report_serialises(cat):
    d = schwarzian_norm(cat["koebe"], DISK, 16).to_dict()
    assert set(d) >= {"estimate", "argmax", "grid", "checks", "skipped_points"}
    assert d["grid"]["refinement_passes"] == 3


def test_skipped_points_are_counted():
    # h has a pole at the grid centre: that point is skipped, not fatal
    rep = schwarzian_norm(parse_expression("z+1/z"), DISK, 16)
    assert rep.skipped_points >= 1
    assert math.isfinite(rep.estimate)


@pytest.mark.parametrize("n", [8, 16, 32])
def test_monotone_in_n(cat, n):
    for name in ("koebe", "hille_0.5", "polynomial", "exp_sqrt"):
        small = schwarzian_norm(cat[name], DISK, n).estimate
        big = schwarzian_norm(cat[name], DISK, 2 * n).estimate
        assert big >= small - 1e-12, name


def test_affine_invariance_of_norm():
    f = HarmonicMap.from_text("z+0.2*z^2", "0.1*z^2+0.05*z^3")
    for a in (0.4, -0.2 + 0.5j):
        a_norm = schwarzian_norm(affine_transform(f, a), DISK, 64).estimate
        assert abs(a_norm - schwarzian_norm(f, DISK, 64).estimate) < 2e-3


def test_norm_on_quasidisk_matches_pullback(zeps):
    f = parse_expression("z+0.1*z^3")
    rep = schwarzian_norm(f, zeps, 24)
    grid = zeps.reference_grid(24)
    w = grid.u
    big_f = substitute(f, zeps.phi)
    pull = np.abs(schwarzian_analytic(eval_jet(big_f, w)) - schwarzian_analytic(eval_jet(zeps.phi, w))) * (1 - np.abs(w) ** 2) ** 2
    direct = np.abs(schwarzian_analytic(eval_jet(f, zeps.chart(w)))) / zeps.chart_density(w) ** 2
    assert np.max(np.abs(pull - direct)) < 1e-6
    assert rep.estimate >= np.max(pull) - 1e-6


def test_hyperbolic_norm_examples():
    rep = hyperbolic_norm(parse_expression("z"), DISK, 32)
    assert abs(rep.estimate - 1) < 1e-12
    assert hyperbolic_norm(parse_expression("0.5"), DISK, 16).estimate == 0
    assert hyperbolic_norm(parse_expression("z^2"), DISK, 32).estimate <= 1 + 1e-9


def test_audit_koebe_equality_at_origin(cat):
    rep = inequality_audit(HarmonicMap.analytic(cat["koebe"]), DISK, 16)
    assert rep.passed
    z = rep.points["z"]
    k = int(np.argmin(np.abs(z)))
    assert z[k] == 0
    lhs = rep.points["pre_schwarzian_abs"][k]
    rhs = 2 / rep.points["d"][k] * math.sqrt(1 + rep.extra["sh_norm"] / 2)
    assert abs(lhs - 4) < 1e-12 and abs(rhs - 4) < 1e-9


def test_audit_nehari_pommerenke_origin(cat):
    rep = inequality_audit(HarmonicMap.analytic(cat["nehari_L"]), DISK, 16)
    c = rep.check("pommerenke")
    assert c.passed
    assert rep.points["pre_schwarzian_abs"][0] < 1e-15
    assert c.rhs == pytest.approx(2 * math.sqrt(2), rel=1e-9)


def test_audit_on_other_domains(zeps):
    f = HarmonicMap.from_text("z+0.1*z^2", "0.05*z^2")
    for dom in (HalfPlane(), zeps):
        g = f if dom is zeps else HarmonicMap.from_text("z", "0.2*z")
        rep = inequality_audit(g, dom, 12)
        names = {c.name for c in rep.checks}
        assert "pommerenke" not in names and "koebe_window" in names
        assert rep.passed, [c for c in rep.checks if not c.passed]


def test_audit_annulus_has_no_koebe_window():
    rep = inequality_audit(HarmonicMap.from_text("z", "0.1*z"), Annulus(0.3), 12)
    assert "koebe_window" not in {c.name for c in rep.checks}


def test_empirical_constant_reported():
    rep = inequality_audit(HarmonicMap.from_text("z", "z^3/6"), DISK, 16)
    assert rep.extra["dilatation_growth_C"] > 0
    assert rep.check("sh_norm_chain").passed


def test_failing_check_carries_witness():
    # sup |w| is about 0.99 here, so the claimed bound d = 0.3 must fail
    rep = extended_affine_audit(HALF, DISK, 1.5, 2.0, 0.3, n=8)
    bad = [c for c in rep.checks if not c.passed]
    assert bad and all(c.witness is not None for c in bad)
    assert not rep.check("dilatation_bound").passed


def test_univalence_examples(cat):
    v = univalence_scan(parse_expression("z^2"), DISK, 2000)
    assert v.found
    assert abs(v.z1 + v.z2) < 1e-8
    v = univalence_scan(cat["hille_1"], DISK, 10_000)
    assert v.found
    assert abs(v.z1) < 1e-4 and abs(v.z2 + math.tanh(math.pi)) < 1e-4
    assert v.rotation_residual < 1e-10
    v = univalence_scan(cat["koebe"], DISK, 10_000)
    assert not v.found
    assert v.to_dict()["verdict"] == "no collision at resolution"


def test_univalence_sample_limit(cat):
    with pytest.raises(ValueError):
        univalence_scan(cat["koebe"], DISK, 200_000)


def test_extended_affine_examples(zeps):
    small = ConformalQuasidisk(parse_expression("0.3*z"))
    rep = extended_affine_audit(HALF, small, 1.5, 2.0, 0.3, n=16)
    assert rep.passed
    assert rep.estimate < 1e-9
    rep = extended_affine_audit(HALF, DISK, 0.5 + 0.3j, 2.0, 0.5, n=8)
    assert rep.check("sh_a_identity").passed
    g0 = HarmonicMap.from_text("z/(1-z)^2", "0")
    rep = extended_affine_audit(g0, DISK, 1.3j, 2.0, 0.3, n=8)
    assert rep.estimate == 0 or rep.estimate < 1e-12
    assert rep.check("C_bound").lhs == pytest.approx(1.3)


def test_extended_affine_preconditions():
    with pytest.raises(ValueError):
        extended_affine_audit(HALF, DISK, 2.5, 2.0, 0.3)
    with pytest.raises(ValueError):
        extended_affine_audit(HALF, DISK, 1.5, 2.0, 0.6)


def test_psi_bound():
    small = ConformalQuasidisk(parse_expression("0.3*z"))
    rep = psi_bound_audit(HALF, small, 0.0, 2.0, 0.9, n=12)
    assert rep.passed
    assert rep.estimate <= 0.5
