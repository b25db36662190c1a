"""
Sup-norm estimation and inequality audits.

Estimates are *lower bounds* of the true supremum: a coarse polar grid in the
reference chart followed by a few local 9x9 refinement passes around the
running argmax. Nothing here proves a bound; every audit reports margins and
the witness point where a margin is smallest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .domains import HyperbolicDomain, UnitDisk
from .expr_lang import Expr, as_expr, eval_jet, evaluate
from .harmonic import HarmonicMap, generalized_dilatation, rotation_residual
from .schwarzian import omega_jet, pre_schwarzian, schwarzian_analytic, schwarzian_harmonic

IDENTITY_TOL = 1e-9


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    witness: complex | None = None

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "margin": _num(self.margin),
            "pass": bool(self.passed),
        }
        if self.witness is not None:
            d["witness"] = [_num(self.witness.real), _num(self.witness.imag)]
        return d


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


@dataclass
class AuditReport:
    estimate: float | None = None
    argmax: complex | None = None
    grid: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    skipped_points: int = 0
    flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        d: dict = {}
        if self.estimate is not None:
            d["estimate"] = _num(self.estimate)
        if self.argmax is not None:
            d["argmax"] = [_num(self.argmax.real), _num(self.argmax.imag)]
        d["grid"] = dict(self.grid)
        d["checks"] = [c.to_dict() for c in self.checks]
        d["skipped_points"] = int(self.skipped_points)
        if self.flags:
            d["flags"] = dict(self.flags)
        if self.extra:
            d["extra"] = self.extra
        return d


# ---------------------------------------------------------------------------
# generic sup estimation


def _refine_level(integrand, domain, n, passes, local):
    """Coarse grid at density ``n`` and ``passes`` shrinking 9x9 windows around its argmax."""
    grid = domain.reference_grid(n)
    vals = np.asarray(integrand(grid.u), dtype=float)
    good = np.isfinite(vals)
    skipped = int(np.sum(~good))
    if not np.any(good):
        return None, None, False, skipped
    k = int(np.argmax(np.where(good, vals, -np.inf)))
    best_u, best = grid.u[k], float(vals[k])
    on_boundary = int(grid.ring[k]) == grid.n_rings - 1
    width = float(grid.spacing[k])
    for _ in range(passes):
        cand = best_u + width * local
        cand = cand[domain.reference_contains(cand)]
        if cand.size:
            v = np.asarray(integrand(cand), dtype=float)
            ok = np.isfinite(v)
            skipped += int(np.sum(~ok))
            if np.any(ok):
                j = int(np.argmax(np.where(ok, v, -np.inf)))
                if v[j] > best:
                    best, best_u = float(v[j]), cand[j]
        width /= 4
    return best, best_u, on_boundary, skipped


def sup_estimate(
    integrand: Callable[[np.ndarray], np.ndarray],
    domain: HyperbolicDomain,
    n: int,
    passes: int = 3,
) -> AuditReport:
    """Maximise ``integrand(u)`` over reference coordinates ``u``.

    The grid at density ``n`` is refined around its argmax, and so are the
    coarser grids ``n//2, n//4, ...`` (down to 8). Since the levels used for
    ``2n`` include every level used for ``n``, the estimate is monotone in
    ``n`` by construction. ``integrand`` returns ``nan`` at points it cannot
    evaluate; those are skipped and counted.
    """
    offs = np.linspace(-1, 1, 9)
    local = (offs[None, :] + 1j * offs[:, None]).ravel()
    levels = [n]
    while levels[-1] // 2 >= 8:
        levels.append(levels[-1] // 2)
    best, best_u, on_boundary, skipped = None, None, False, 0
    for level in levels:
        val, u, edge, skip = _refine_level(integrand, domain, level, passes, local)
        skipped += skip
        if val is not None and (best is None or val > best):
            best, best_u, on_boundary = val, u, edge
    grid = {"N": n, "refinement_passes": passes}
    if best is None:
        return AuditReport(None, None, {"N": n, "refinement_passes": 0}, skipped_points=skipped)
    return AuditReport(
        estimate=best,
        argmax=complex(domain.chart(best_u)),
        grid=grid,
        skipped_points=skipped,
        flags={"sup_on_boundary": bool(on_boundary)},
        extra={"reference_argmax": [float(np.real(best_u)), float(np.imag(best_u))], "levels": levels},
    )


def _as_map(f) -> HarmonicMap:
    return f if isinstance(f, HarmonicMap) else HarmonicMap.analytic(as_expr(f))


def schwarzian_norm(f, domain: HyperbolicDomain, n: int = 64, passes: int = 3) -> AuditReport:
    """Estimate ``sup lambda(z)^-2 |S_f(z)|`` over the domain."""
    f = _as_map(f)

    def integrand(u):
        z = domain.chart(u)
        lam = domain.chart_density(u)
        with np.errstate(all="ignore"):
            return np.abs(f.schwarzian(z, strict=False)) / lam**2

    return sup_estimate(integrand, domain, n, passes)


def _omega_parts(source, z):
    if isinstance(source, HarmonicMap):
        return source.omega_jets(z, strict=False)
    j = eval_jet(as_expr(source), z, strict=False)
    return j.f0, j.f1, j.f2


def omega_star(source, z, lam):
    w, w1, _ = _omega_parts(source, z)
    with np.errstate(all="ignore"):
        out = w1 / (lam * (1 - np.abs(w) ** 2))
    return np.where(np.abs(w) < 1, out, np.nan)


def hyperbolic_norm(source, domain: HyperbolicDomain, n: int = 64, passes: int = 3) -> AuditReport:
    """Estimate ``sup |w*(z)|`` for an analytic ``w`` (or the dilatation of a map)."""

    def integrand(u):
        z = domain.chart(u)
        return np.abs(omega_star(source, z, domain.chart_density(u)))

    return sup_estimate(integrand, domain, n, passes)


# ---------------------------------------------------------------------------
# inequality audit


def _worst(name, lhs, rhs, margin, z, tol_scale=None, tol=IDENTITY_TOL) -> Check:
    """Summarise a per-point inequality ``lhs <= rhs`` by its smallest margin."""
    margin = np.asarray(margin, dtype=float)
    scale = np.ones_like(margin) if tol_scale is None else np.maximum(1.0, np.abs(tol_scale))
    rel = np.where(np.isfinite(margin), margin / scale, np.inf)
    k = int(np.argmin(rel))
    lhs_k = float(np.broadcast_to(lhs, margin.shape)[k])
    rhs_k = float(np.broadcast_to(rhs, margin.shape)[k])
    return Check(name, lhs_k, rhs_k, float(margin[k]), bool(rel[k] >= -tol), complex(z[k]))


def inequality_audit(f, domain: HyperbolicDomain, n: int = 32) -> AuditReport:
    """Check the growth inequalities of the analytic part and dilatation of ``f`` on a grid.

    Checks: Pommerenke's inequality (unit disk only), its boundary-distance
    form ``|h''/h'| <= 2/d sqrt(1 + |Sh|/2)``, the Koebe window
    ``1/4 <= d lambda <= 1`` (simply connected domains), Schwarz-Pick
    ``|w*| <= 1`` and the chain bounding ``|Sh|/lambda^2``. The ratio
    ``sup d^2 |w''| / (1 - |w|^2) / ||w*||`` is reported as an empirical
    constant without pass/fail.
    """
    f = _as_map(f)
    t = schwarzian_norm(f, domain, n)
    m_rep = schwarzian_norm(HarmonicMap.analytic(f.h), domain, n)
    r_rep = hyperbolic_norm(f, domain, n)
    big_m, t_est = m_rep.estimate, t.estimate
    r_est = r_rep.estimate if r_rep.estimate is not None else 0.0

    grid = domain.reference_grid(n)
    z_all = domain.chart(grid.u)
    lam_all = domain.chart_density(grid.u)
    jh, jg = f.jets(z_all, strict=False)
    w, w1, w2 = omega_jet(jh, jg, strict=False)
    ok = np.isfinite(jh.f3) & np.isfinite(jg.f3) & (np.abs(jh.f1) > 0) & (np.abs(w) < 1) & np.isfinite(lam_all)
    skipped = int(np.sum(~ok))
    z, lam = z_all[ok], lam_all[ok]
    jh, w, w1, w2 = jh[ok], w[ok], w1[ok], w2[ok]
    d = np.asarray(domain.boundary_distance(z), dtype=float)
    pre = pre_schwarzian(jh)
    sh = schwarzian_analytic(jh)
    sh_w = np.abs(sh) / lam**2
    wstar = np.abs(w1) / (lam * (1 - np.abs(w) ** 2))

    rep = AuditReport(
        estimate=t_est,
        argmax=t.argmax,
        grid={"N": n, "refinement_passes": t.grid.get("refinement_passes", 0)},
        skipped_points=skipped,
        flags=dict(t.flags),
    )
    checks = rep.checks
    root = math.sqrt(1 + big_m / 2)
    if isinstance(domain, UnitDisk):
        one = 1 - np.abs(z) ** 2
        lhs = one * np.abs(pre - 2 * np.conj(z) / one)
        rhs = 2 * root
        checks.append(_worst("pommerenke", lhs, rhs, rhs - lhs, z, tol_scale=rhs))
    lhs = np.abs(pre)
    rhs = 2 / d * root
    checks.append(_worst("pommerenke_distance", lhs, rhs, rhs - lhs, z, tol_scale=rhs))
    if domain.simply_connected:
        dl = d * lam
        checks.append(_worst("koebe_window", dl, 1.0, np.minimum(dl - 0.25, 1 - dl), z))
    checks.append(_worst("schwarz_pick", wstar, 1.0, 1 - wstar, z))

    ratio = d**2 * np.abs(w2) / (1 - np.abs(w) ** 2)
    c_emp = float(np.max(ratio)) / r_est if r_est > 0 else None
    rep.extra["dilatation_growth_C"] = c_emp
    rep.extra["sh_norm"] = big_m
    rep.extra["omega_star_norm"] = r_est
    lhs_chain = float(np.max(sh_w))
    rhs_chain = t_est + 8 * r_est * root + 16 * (c_emp or 0.0) * r_est + 1.5 * r_est**2
    k = int(np.argmax(sh_w))
    checks.append(
        Check(
            "sh_norm_chain",
            lhs_chain,
            rhs_chain,
            rhs_chain - lhs_chain,
            rhs_chain - lhs_chain >= -IDENTITY_TOL * max(1.0, rhs_chain),
            complex(z[k]),
        )
    )
    rep.points = {
        "z": z,
        "d": d,
        "lambda": lam,
        "sh_weighted": sh_w,
        "omega_star": wstar,
        "pre_schwarzian_abs": np.abs(pre),
        "dilatation_growth_ratio": ratio,
    }
    return rep


# ---------------------------------------------------------------------------
# extended affine family


def extended_affine_audit(
    f: HarmonicMap,
    domain: HyperbolicDomain,
    a: complex,
    delta: float,
    d: float,
    n: int = 16,
    points=None,
) -> AuditReport:
    """Compare ``S(h + a g)`` computed directly with the dilatation-based identity.

    For ``1 < |a| <= delta`` (with ``delta < 1/d``) also checks the two modulus
    bounds ``|(a + conj w)/(1 + a w)| <= (delta - d)/(1 - delta d)`` and
    ``|conj w - a (1 - |w|^2)/(1 + a w)| <= d + delta (1 - d^2)/(1 - delta d)``.
    """
    a = complex(a)
    if abs(a) > delta + 1e-15:
        raise ValueError("need |a| <= delta")
    z = domain.sample(n) if points is None else np.atleast_1d(np.asarray(points, dtype=complex))
    jh, jg = f.jets(z, strict=False)
    w, w1, w2 = omega_jet(jh, jg, strict=False)
    ok = np.isfinite(w2) & (np.abs(w) < 1) & np.isfinite(jh.f3)
    z, jh, jg, w, w1, w2 = z[ok], jh[ok], jg[ok], w[ok], w1[ok], w2[ok]
    direct = schwarzian_analytic(jh + a * jg)
    sf = schwarzian_harmonic(jh, jg)
    one = 1 - np.abs(w) ** 2
    moeb = (a + np.conj(w)) / (1 + a * w)
    tail = np.conj(w) - a * one / (1 + a * w)
    formula = sf + moeb * (w2 / one - (w1 / one) * (jh.f2 / jh.f1) + 1.5 * (w1 / one) ** 2 * tail)
    resid = np.abs(direct - formula)
    scale = np.maximum(1.0, np.abs(direct))
    k = int(np.argmax(resid / scale))
    rep = AuditReport(
        estimate=float(np.max(resid)),
        argmax=complex(z[k]),
        grid={"N": n, "refinement_passes": 0, "points": int(z.size)},
        skipped_points=int(np.sum(~ok)),
    )
    rep.checks.append(
        Check("sh_a_identity", float(resid[k]), IDENTITY_TOL, IDENTITY_TOL - float(resid[k] / scale[k]),
              bool(resid[k] / scale[k] < IDENTITY_TOL), complex(z[k]))
    )
    absw = np.abs(w)
    rep.checks.append(_worst("dilatation_bound", absw, d, d - absw, z))
    if abs(a) > 1:
        if not delta * d < 1:
            raise ValueError("need delta < 1/d")
        c_bound = (delta - d) / (1 - delta * d)
        c_prime = d + delta * (1 - d * d) / (1 - delta * d)
        lhs_c = np.abs(moeb)
        lhs_cp = np.abs(tail)
        rep.checks.append(_worst("C_bound", lhs_c, c_bound, c_bound - lhs_c, z))
        rep.checks.append(_worst("C_prime_bound", lhs_cp, c_prime, c_prime - lhs_cp, z))
        rep.extra.update({"C": c_bound, "C_prime": c_prime})
    rep.points = {"z": z, "residual": resid, "moebius_factor": np.abs(moeb), "tail_factor": np.abs(tail)}
    return rep


def psi_bound_audit(f: HarmonicMap, domain: HyperbolicDomain, alpha: complex, delta: float, r: float, n: int = 16) -> AuditReport:
    """``max |psi_alpha|`` over the closed dilation ``Omega_r`` against ``1/delta``."""
    grid = domain.reference_grid(n)
    u = grid.u[np.abs(grid.u) <= r + 1e-15] * (r / (1 - domain.margin))
    u = np.concatenate([u, r * np.exp(2j * np.pi * np.arange(4 * n) / (4 * n))])
    z = domain.chart(u)
    psi = np.abs(generalized_dilatation(f, alpha, z))
    k = int(np.argmax(psi))
    rep = AuditReport(estimate=float(psi[k]), argmax=complex(z[k]), grid={"N": n, "refinement_passes": 0})
    rep.checks.append(_worst("psi_bound", psi, 1 / delta, 1 / delta - psi, z))
    return rep


# ---------------------------------------------------------------------------
# univalence scan


@dataclass
class UnivalenceVerdict:
    """Outcome of :func:`univalence_scan`.

    ``kind`` is ``"witness"`` when two distinct points with equal images were
    found and ``"no_collision"`` otherwise. A negative result only means no
    collision was found at the sampled resolution; it is not a proof.
    """

    kind: str
    n_samples: int
    candidates_tested: int
    z1: complex | None = None
    z2: complex | None = None
    image_gap: float | None = None
    rotation_residual: float | None = None

    @property
    def found(self) -> bool:
        return self.kind == "witness"

    def to_dict(self) -> dict:
        d = {"verdict": self.kind if self.found else "no collision at resolution",
             "n_samples": self.n_samples, "candidates_tested": self.candidates_tested}
        if self.found:
            d["witness"] = [[_num(self.z1.real), _num(self.z1.imag)], [_num(self.z2.real), _num(self.z2.imag)]]
            d["image_gap"] = _num(self.image_gap)
            d["rotation_residual"] = _num(self.rotation_residual)
        return d


def _solve_equal_image(f: HarmonicMap, target, x0, iterations: int = 60):
    """Newton iteration for ``f(x) = target`` (real 2x2 system written in complex form)."""
    x = np.asarray(x0, dtype=complex).copy()
    for _ in range(iterations):
        jh, jg = f.jets(x, strict=False)
        e = jh.f0 + np.conj(jg.f0) - target
        a_ = jh.f1
        b_ = np.conj(jg.f1)
        with np.errstate(all="ignore"):
            dx = (-e * np.conj(a_) + b_ * np.conj(e)) / (np.abs(a_) ** 2 - np.abs(b_) ** 2)
        dx = np.where(np.isfinite(dx), dx, 0)
        # keep the iteration near the unit-scale picture
        big = np.abs(dx) > 0.25
        dx = np.where(big, 0.25 * dx / np.where(big, np.abs(dx), 1), dx)
        x = x + dx
        if np.all(np.abs(dx) < 1e-15 * np.maximum(1, np.abs(x))):
            break
    with np.errstate(all="ignore"):
        gap = np.abs(f(x, strict=False) - target)
    return x, gap


def univalence_scan(
    f,
    domain: HyperbolicDomain,
    n_samples: int = 10_000,
    eps_sep: float = 1e-6,
    neighbours: int = 8,
) -> UnivalenceVerdict:
    """Search for two distinct points with equal images.

    Samples are the reference polar grid. Image points are indexed in a k-d
    tree; each sample's nearest image neighbours that are not its own
    neighbours in the plane seed a Newton solve for an exact collision
    partner. Confirmed witnesses are ordered by distance of the first point
    to the base point ``z0`` and the closest one is returned.
    """
    if n_samples > 100_000:
        raise ValueError("n_samples is limited to 1e5")
    f = _as_map(f)
    n_r = max(2, int(math.ceil(math.sqrt(max(n_samples - 1, 4) / 4))))
    grid = domain.reference_grid(n_r)
    z = domain.chart(grid.u)
    img = f(z, strict=False)
    ok = np.isfinite(img)
    z, img = z[ok], img[ok]
    jh, jg = f.jets(z, strict=False)
    speed = np.abs(jh.f1) + np.abs(jg.f1)

    zt = cKDTree(np.column_stack([z.real, z.imag]))
    nd, _ = zt.query(np.column_stack([z.real, z.imag]), k=min(5, z.size))
    cell = nd[:, -1]

    it = cKDTree(np.column_stack([img.real, img.imag]))
    k = min(neighbours + 1, z.size)
    dist, idx = it.query(np.column_stack([img.real, img.imag]), k=k)
    ii = np.repeat(np.arange(z.size), k - 1)
    jj = idx[:, 1:].ravel()
    dd = dist[:, 1:].ravel()
    keep = (np.abs(z[ii] - z[jj]) > eps_sep) & (dd <= 2 * cell[jj] * speed[jj] + 1e-10)
    ii, jj = ii[keep], jj[keep]
    tested = int(ii.size)
    if tested == 0:
        return UnivalenceVerdict("no_collision", int(z.size), 0)

    target = img[ii]
    x, gap = _solve_equal_image(f, target, z[jj])
    tol = 1e-12 * np.maximum(1.0, np.abs(target))
    inside = domain.contains(x)
    good = inside & (gap <= tol) & (np.abs(x - z[ii]) > eps_sep) & np.isfinite(x)
    if not np.any(good):
        return UnivalenceVerdict("no_collision", int(z.size), tested)

    z1, z2, gp = z[ii][good], x[good], gap[good]
    # orient each pair so the first point is the one nearer the base point
    swap = np.abs(z2 - f.z0) < np.abs(z1 - f.z0)
    z1, z2 = np.where(swap, z2, z1), np.where(swap, z1, z2)
    order = np.lexsort((z2.imag, z2.real, np.round(np.abs(z1 - f.z0), 12)))
    best = order[0]
    a, b = complex(z1[best]), complex(z2[best])
    return UnivalenceVerdict(
        "witness",
        int(z.size),
        tested,
        a,
        b,
        float(gp[best]),
        rotation_residual(f, a, b),
    )
