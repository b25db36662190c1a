"""
Two-piece extension of a harmonic map across the level curve
``gamma_r = phi(|w| = r)``: ``f`` inside, ``Lambda o f o lambda`` outside,
with ``lambda`` the conformal reflection across ``gamma_r`` and ``Lambda`` a
collar reflection across the image curve ``Gamma_r = f(gamma_r)``.

The outer piece is only evaluable on a collar around ``gamma_r``; all
measurements (Beltrami coefficient, Jacobian, boundary continuity) are taken
on collar grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely

from .domains import HyperbolicDomain
from .errors import AmbiguousProjection, CurveSelfIntersection, OutsideCollar
from .harmonic import HarmonicMap
from .quasi_geom import Beltrami, CollarReflection, CurveSample, Level, beltrami, quasicircle_constant, reflect, riemann_pair

CURVE_SAMPLES = 4096


def _image_curve(f: HarmonicMap, domain: HyperbolicDomain, r: float, n: int = CURVE_SAMPLES):
    """``gamma_r`` and ``Gamma_r = f(gamma_r)`` as curves with exact evaluators."""
    phi, _, dphi = riemann_pair(domain)

    def gamma(t):
        w = r * np.exp(1j * np.asarray(t, dtype=float))
        return phi(w), dphi(w) * 1j * w

    def image(t):
        z, dz = gamma(t)
        jh, jg = f.jets(z)
        return jh.f0 + np.conj(jg.f0), jh.f1 * dz + np.conj(jg.f1 * dz)

    t = 2 * np.pi * np.arange(n) / n
    g_pts, g_tan = gamma(t)
    i_pts, i_tan = image(t)
    return CurveSample(t, g_pts, g_tan, True, gamma), CurveSample(t, i_pts, i_tan, True, image)


@dataclass
class ExtensionAssembly:
    """The extension ``f~_r`` of ``f`` across ``gamma_r``.

    ``outer`` is ``None`` when ``Gamma_r`` coincides with ``gamma_r``; the
    outer reflection is then ``lambda_r`` itself.
    """

    f: HarmonicMap
    domain: HyperbolicDomain
    r: float
    delta_c: float
    gamma_r: CurveSample
    image_r: CurveSample
    outer: CollarReflection | None
    sup_omega: float
    info: dict = field(default_factory=dict)

    @property
    def is_identity(self) -> bool:
        """``f`` fixes ``gamma_r`` pointwise, so it is the identity on ``Omega_r``
        (harmonic Dirichlet problem) and the assembled map is the identity."""
        return bool(self.info.get("identity", False))

    @property
    def inner(self) -> Level:
        return Level(self.domain, self.r)

    def _outer_reflect(self, y):
        if self.outer is None:
            return reflect(self.inner, y)
        return self.outer(y)

    def __call__(self, z):
        scalar = not np.ndim(z)
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        _, inv, _ = riemann_pair(self.domain)
        w = np.asarray(inv(z), dtype=complex)
        inside = np.abs(w) <= self.r
        out = np.empty_like(z)
        if np.any(inside):
            out[inside] = self.f(z[inside])
        if np.any(~inside):
            zo = z[~inside]
            out[~inside] = self._outer_reflect(self.f(reflect(self.inner, zo)))
        return complex(out[0]) if scalar else out

    def continuity_defect(self, n: int = 512) -> float:
        """``max |Lambda(f(lambda(z))) - f(z)|`` over ``n`` points of ``gamma_r``."""
        t = 2 * np.pi * np.arange(n) / n
        z = self.gamma_r.evaluate(t)[0]
        inner_val = self.f(z)
        outer_val = self._outer_reflect(self.f(reflect(self.inner, z)))
        return float(np.max(np.abs(outer_val - inner_val)))


def _probe_reach(refl: CollarReflection, curve: CurveSample, m: int = 256) -> None:
    """Evaluate the reflection at normal offsets ``0.9 delta_c`` on both sides."""
    t = 2 * np.pi * np.arange(m) / m
    p, tan = curve.evaluate(t)
    nrm = -1j * tan / np.abs(tan)
    for s in (0.9, -0.9):
        refl(p + s * refl.delta_c * nrm)


def build_extension(
    f: HarmonicMap,
    domain: HyperbolicDomain,
    r: float,
    delta_c: float | None = None,
    n_check: int = 32,
) -> ExtensionAssembly:
    """Assemble ``f~_r``.

    ``delta_c`` defaults to 5% of the diameter of ``Gamma_r`` and is halved
    while the reach probe reports an ambiguous projection.
    Raises :class:`CurveSelfIntersection` when ``Gamma_r`` is not simple.
    """
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    w = f.dilatation(domain.sample(n_check), strict=False)
    sup_omega = float(np.nanmax(np.abs(w)))
    if not sup_omega < 1:
        raise ValueError("f is not sense-preserving on the domain samples")
    gamma_r, image_r = _image_curve(f, domain, r)
    if not shapely.LinearRing(np.column_stack([image_r.points.real, image_r.points.imag])).is_simple:
        raise CurveSelfIntersection(f"f(gamma_r) self-intersects at r = {r}: f is not injective there")
    dc = 0.05 * image_r.diameter() if delta_c is None else float(delta_c)
    gap = float(np.max(np.abs(image_r.points - gamma_r.points)))
    identical = gap < 1e-12
    outer = None
    halvings = 0
    if not identical:
        while True:
            outer = CollarReflection(image_r, dc)
            try:
                _probe_reach(outer, image_r)
                break
            except (AmbiguousProjection, OutsideCollar):
                if halvings >= 12:
                    raise
                dc /= 2
                halvings += 1
    return ExtensionAssembly(
        f, domain, r, dc, gamma_r, image_r, outer, sup_omega,
        {"outer_reflection": "conformal" if identical else "collar", "delta_c_halvings": halvings,
         "identity": gap == 0.0},
    )


@dataclass(frozen=True)
class CollarMeasurement:
    r: float
    max_mu: float
    K: float
    interior_K: float
    exterior_K: float
    defect: float
    min_jacobian_inner: float
    min_jacobian_outer: float
    qc_constant: float
    delta_c: float

    def row(self) -> dict:
        return {
            "r": self.r,
            "maxmu": self.max_mu,
            "K": self.K,
            "defect": self.defect,
            "qc_constant": self.qc_constant,
        }


def collar_points(asm: ExtensionAssembly, n: int, depth: float, side: int):
    """Grid on one side of ``gamma_r`` at reference radii ``r (1 +- x)``, ``x`` up to ``depth``."""
    phi, _, _ = riemann_pair(asm.domain)
    xs = depth * np.array([0.25, 0.5, 1.0])
    t = 2 * np.pi * (np.arange(4 * n) + 0.5) / (4 * n)
    rad = asm.r * (1 + side * xs)
    w = (rad[:, None] * np.exp(1j * t[None, :])).ravel()
    return phi(w)


def measure(asm: ExtensionAssembly, n: int = 32, depth: float = 0.004, n_quadruples: int = 20_000, seed: int = 24301) -> CollarMeasurement:
    """Beltrami sweep on both collar sides plus boundary continuity and ``Gamma_r``'s constant."""
    zi = collar_points(asm, n, depth, -1)
    zo = collar_points(asm, n, depth, +1)
    if asm.is_identity:
        bi = bo = Beltrami(np.zeros_like(zi), np.ones(zi.shape), np.ones(zi.shape))
    else:
        bi = beltrami(asm, zi, strict=False)
        bo = beltrami(asm, zo, strict=False)
    mu_all = np.concatenate([np.abs(bi.mu), np.abs(bo.mu)])
    max_mu = float(np.max(mu_all))
    k = (1 + max_mu) / (1 - max_mu) if max_mu < 1 else float("inf")
    qc = quasicircle_constant(asm.image_r, n_quadruples, seed=seed, refine_top=4).estimate
    return CollarMeasurement(
        r=float(asm.r),
        max_mu=max_mu,
        K=k,
        interior_K=float(np.max(bi.K)),
        exterior_K=float(np.max(bo.K)),
        defect=asm.continuity_defect(),
        min_jacobian_inner=float(np.min(bi.jacobian)),
        min_jacobian_outer=float(np.min(bo.jacobian)),
        qc_constant=float(qc),
        delta_c=float(asm.delta_c),
    )


@dataclass
class ExtensionReport:
    rows: list[CollarMeasurement]
    sup_omega: float

    @property
    def k_values(self) -> np.ndarray:
        return np.array([m.K for m in self.rows])

    @property
    def k_variation(self) -> float:
        k = self.k_values
        return float((k.max() - k.min()) / k.min())

    @property
    def qc_variation(self) -> float:
        q = np.array([m.qc_constant for m in self.rows])
        return float((q.max() - q.min()) / q.min())

    @property
    def k_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.k_values)) and self.k_variation < 0.25)

    def csv_rows(self) -> list[dict]:
        return [m.row() for m in self.rows]

    def to_dict(self) -> dict:
        return {
            "table": [
                {**m.row(), "interior_K": m.interior_K, "exterior_K": m.exterior_K,
                 "min_jacobian_inner": m.min_jacobian_inner, "min_jacobian_outer": m.min_jacobian_outer,
                 "delta_c": m.delta_c}
                for m in self.rows
            ],
            "sup_omega": self.sup_omega,
            "K_variation": self.k_variation,
            "qc_variation": self.qc_variation,
            "K_bounded": self.k_bounded,
        }


def extension_report(
    f: HarmonicMap,
    domain: HyperbolicDomain,
    r_list,
    n: int = 32,
    delta_c: float | None = None,
    depth: float = 0.004,
    seed: int = 24301,
) -> ExtensionReport:
    r_list = [float(r) for r in r_list]
    if any(not 0 < r < 1 for r in r_list) or any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise ValueError("r_list must be increasing inside (0, 1)")
    rows = []
    sup_omega = 0.0
    for r in r_list:
        asm = build_extension(f, domain, r, delta_c)
        sup_omega = asm.sup_omega
        rows.append(measure(asm, n, depth, seed=seed))
    return ExtensionReport(rows, sup_omega)
