"""
Cross-ratios, quasicircle constants, reflections across curves and
Beltrami coefficients measured by finite differences.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .domains import ConformalQuasidisk, HyperbolicDomain, UnitDisk, golden_minimize
from .errors import (
    AmbiguousProjection,
    DegenerateQuadruple,
    InvalidCurve,
    OrientationReversed,
    OutsideCollar,
    StencilOutsideDomain,
)
from .expr_lang import eval_jet, evaluate
from .norms import AuditReport, Check

CHORDAL_TOL = 1e-12


class _Infinity:
    """The point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"


INFINITY = _Infinity()


def is_infinite(z) -> bool:
    if z is INFINITY:
        return True
    z = complex(z)
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


def chordal_distance(a, b) -> float:
    ia, ib = is_infinite(a), is_infinite(b)
    if ia and ib:
        return 0.0
    if ia or ib:
        w = complex(b if ia else a)
        return 2 / math.sqrt(1 + abs(w) ** 2)
    a, b = complex(a), complex(b)
    return 2 * abs(a - b) / math.sqrt((1 + abs(a) ** 2) * (1 + abs(b) ** 2))


def cross_ratio(z1, z2, z3, z4) -> complex:
    """``(z1-z2)(z3-z4) / ((z1-z3)(z2-z4))`` with one argument possibly :data:`INFINITY`.

    The two factors containing the infinite point cancel to their limit
    (``+1`` or ``-1``).
    """
    pts = (z1, z2, z3, z4)
    for i in range(4):
        for j in range(i + 1, 4):
            if chordal_distance(pts[i], pts[j]) <= CHORDAL_TOL:
                raise DegenerateQuadruple(f"points {i + 1} and {j + 1} coincide")
    inf = [is_infinite(p) for p in pts]
    if not any(inf):
        z1, z2, z3, z4 = map(complex, pts)
        return (z1 - z2) * (z3 - z4) / ((z1 - z3) * (z2 - z4))
    k = inf.index(True)
    z1, z2, z3, z4 = (None if inf[i] else complex(p) for i, p in enumerate(pts))
    if k == 0:
        return (z3 - z4) / (z2 - z4)
    if k == 1:
        return -(z3 - z4) / (z1 - z3)
    if k == 2:
        return -(z1 - z2) / (z2 - z4)
    return (z1 - z2) / (z1 - z3)


def _cross_ratio_arrays(z1, z2, z3, z4):
    with np.errstate(all="ignore"):
        return (z1 - z2) * (z3 - z4) / ((z1 - z3) * (z2 - z4))


def _pairwise_degenerate(*zs) -> np.ndarray:
    bad = np.zeros(np.shape(zs[0]), dtype=bool)
    for i in range(len(zs)):
        for j in range(i + 1, len(zs)):
            a, b = zs[i], zs[j]
            ch = 2 * np.abs(a - b) / np.sqrt((1 + np.abs(a) ** 2) * (1 + np.abs(b) ** 2))
            bad |= ch <= CHORDAL_TOL
    return bad


# ---------------------------------------------------------------------------
# curves


@dataclass
class CurveSample:
    """Samples of a closed Jordan curve ``gamma(t)``, ``t`` in ``[t0, t0 + 2 pi)``.

    ``evaluator(t) -> (points, tangents)`` gives exact values between the
    samples when available; otherwise a periodic cubic spline through the
    samples is used.
    """

    t: np.ndarray
    points: np.ndarray
    tangents: np.ndarray | None = None
    closed: bool = True
    evaluator: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.points = np.asarray(self.points, dtype=complex)
        if self.t.ndim != 1 or self.t.shape != self.points.shape or self.t.size < 4:
            raise InvalidCurve("need matching 1-d arrays of at least 4 samples")
        if not np.all(np.isfinite(self.points)):
            raise InvalidCurve("non-finite curve samples")
        if not np.all(np.diff(self.t) > 0):
            raise InvalidCurve("parameter values must be strictly increasing")
        if self.closed and self.t[-1] - self.t[0] >= 2 * np.pi:
            raise InvalidCurve("parameter values must lie in one period")
        gaps = np.abs(np.diff(self.points))
        if self.closed:
            gaps = np.append(gaps, abs(self.points[0] - self.points[-1]))
        med = np.median(gaps)
        if med <= 0 or np.max(gaps) > 10 * med:
            raise InvalidCurve("adjacent samples further apart than 10x the median spacing")
        self._spline = None
        if self.tangents is None:
            self.tangents = self._spline_eval(self.t)[1]
        self.tangents = np.asarray(self.tangents, dtype=complex)
        if np.any(np.abs(self.tangents) == 0):
            raise InvalidCurve("vanishing tangent")

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_function(cls, fn: Callable, dfn: Callable, n: int = 4096) -> "CurveSample":
        t = 2 * np.pi * np.arange(n) / n

        def ev(tt):
            tt = np.asarray(tt, dtype=float)
            return fn(tt), dfn(tt)

        p, d = ev(t)
        return cls(t, p, d, True, ev)

    @classmethod
    def circle(cls, center: complex = 0j, radius: float = 1.0, n: int = 4096) -> "CurveSample":
        return cls.from_function(
            lambda t: center + radius * np.exp(1j * t), lambda t: 1j * radius * np.exp(1j * t), n
        )

    @classmethod
    def ellipse(cls, a: float, b: float, n: int = 4096) -> "CurveSample":
        return cls.from_function(
            lambda t: a * np.cos(t) + 1j * b * np.sin(t), lambda t: -a * np.sin(t) + 1j * b * np.cos(t), n
        )

    @classmethod
    def from_csv(cls, path) -> "CurveSample":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or set(rows[0]) != {"t", "x", "y"}:
            raise InvalidCurve("curve CSV needs header t,x,y")
        t = np.array([float(r["t"]) for r in rows])
        p = np.array([float(r["x"]) + 1j * float(r["y"]) for r in rows])
        return cls(t, p)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y"])
            for t, p in zip(self.t, self.points):
                w.writerow([repr(float(t)), repr(float(p.real)), repr(float(p.imag))])

    # -- evaluation -----------------------------------------------------------
    @property
    def period(self) -> float:
        return 2 * np.pi

    def _spline_eval(self, t):
        if self._spline is None:
            tt = np.append(self.t, self.t[0] + self.period)
            pp = np.append(self.points, self.points[0])
            self._spline = CubicSpline(tt, np.column_stack([pp.real, pp.imag]), bc_type="periodic")
        t = self.t[0] + np.mod(np.asarray(t, dtype=float) - self.t[0], self.period)
        v = self._spline(t)
        d = self._spline(t, 1)
        return v[..., 0] + 1j * v[..., 1], d[..., 0] + 1j * d[..., 1]

    def evaluate(self, t):
        """Points and tangents at arbitrary parameter values."""
        if self.evaluator is not None:
            return self.evaluator(t)
        return self._spline_eval(t)

    def diameter(self, max_points: int = 1024) -> float:
        step = max(1, self.points.size // max_points)
        p = self.points[::step]
        return float(np.max(np.abs(p[:, None] - p[None, :])))


# ---------------------------------------------------------------------------
# quasicircle constant


def _sorted_quadruples(rng: np.random.Generator, n_points: int, count: int) -> np.ndarray:
    idx = np.sort(rng.integers(0, n_points, size=(count, 4)), axis=1)
    distinct = np.all(np.diff(idx, axis=1) > 0, axis=1)
    return idx[distinct]


def quasicircle_constant(
    curve: CurveSample,
    n_quadruples: int = 100_000,
    seed: int = 24301,
    refine_top: int = 16,
) -> AuditReport:
    """Estimate ``sup |(z1, z2, z3, z4)|`` over separated quadruples on a closed curve.

    Quadruples are sorted index quadruples ``k1 < k2 < k3 < k4`` (cyclic
    order along the parameterisation gives the separation). The best
    quadruples are then refined by coordinate ascent in the parameter,
    keeping the cyclic order and a minimum gap of an eighth of the sample
    spacing.
    """
    if not curve.closed:
        raise InvalidCurve("quasicircle constant needs a closed curve")
    if n_quadruples > 1_000_000:
        raise ValueError("n_quadruples is limited to 1e6")
    rng = np.random.default_rng(seed)
    n = curve.points.size
    quads = _sorted_quadruples(rng, n, n_quadruples)
    z = curve.points[quads]
    bad = _pairwise_degenerate(*(z[:, i] for i in range(4)))
    vals = np.abs(_cross_ratio_arrays(*(z[:, i] for i in range(4))))
    vals = np.where(bad | ~np.isfinite(vals), -np.inf, vals)
    skipped = int(np.sum(bad))
    order = np.argsort(vals)[::-1][:refine_top]
    best = float(vals[order[0]])
    best_t = curve.t[quads[order[0]]]

    spacing = float(np.median(np.diff(curve.t)))
    min_gap = spacing / 8

    def value(ts):
        p, _ = curve.evaluate(np.asarray(ts))
        if _pairwise_degenerate(*p).any():
            return -np.inf
        return float(abs(_cross_ratio_arrays(*p)))

    for q in order:
        ts = curve.t[quads[q]].astype(float)
        cur = value(ts)
        step = spacing
        while step > spacing / 64:
            improved = False
            for i in range(4):
                for s in (step, -step):
                    trial = ts.copy()
                    trial[i] += s
                    ext = np.append(trial, trial[0] + curve.period)
                    if np.any(np.diff(ext) < min_gap):
                        continue
                    v = value(trial)
                    if v > cur:
                        ts, cur, improved = trial, v, True
            if not improved:
                step /= 2
        if cur > best:
            best, best_t = cur, ts
    rep = AuditReport(
        estimate=best,
        argmax=complex(curve.evaluate(np.array([best_t[0]]))[0][0]),
        grid={"N": int(quads.shape[0]), "refinement_passes": int(min(refine_top, len(order)))},
        skipped_points=skipped,
    )
    rep.extra["quadruple_parameters"] = [float(x) for x in best_t]
    return rep


def cross_ratio_factorization_check(f, curve: CurveSample, quadruples) -> float:
    """Largest ``| |(w_i)| - |(h_i)| * |dilatation factor| |`` over the given index quadruples.

    ``w = h + conj(g)`` and each difference factors as
    ``w_i - w_j = (h_i - h_j)(1 + mu_ij A_ij)`` with
    ``A_ij = (g_i - g_j)/(h_i - h_j)`` and ``mu_ij = conj(g_i - g_j)/(g_i - g_j)``
    (``mu_ij = 1`` when ``g_i = g_j``).
    """
    q = np.atleast_2d(np.asarray(quadruples, dtype=int))
    z = curve.points[q]
    h = evaluate(f.h, z)
    g = evaluate(f.g, z)
    if _pairwise_degenerate(*(h[:, i] for i in range(4))).any():
        raise DegenerateQuadruple("h takes (nearly) equal values on a quadruple")
    w = h + np.conj(g)
    lhs = np.abs(_cross_ratio_arrays(*(w[:, i] for i in range(4))))

    def factor(i, j):
        dg = g[:, i] - g[:, j]
        dh = h[:, i] - h[:, j]
        with np.errstate(all="ignore"):
            mu = np.where(dg == 0, 1.0, np.conj(dg) / np.where(dg == 0, 1.0, dg))
        return 1 + mu * dg / dh

    hr = np.abs(_cross_ratio_arrays(*(h[:, i] for i in range(4))))
    rhs = hr * np.abs(factor(0, 1) * factor(2, 3) / (factor(0, 2) * factor(1, 3)))
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# reflections


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float


@dataclass(frozen=True)
class Line:
    point: complex
    direction: complex


@dataclass(frozen=True)
class Level:
    """The curve ``phi(|w| = rho)`` of a unit disk or conformal quasidisk."""

    domain: HyperbolicDomain
    rho: float


def riemann_pair(domain: HyperbolicDomain):
    """``(phi, phi_inverse, dphi)`` for the unit disk or a conformal quasidisk."""
    if isinstance(domain, ConformalQuasidisk):
        return (
            lambda w: evaluate(domain.phi, w),
            lambda z: domain.invert_riemann(z, strict=False),
            lambda w: eval_jet(domain.phi, w).f1,
        )
    if isinstance(domain, UnitDisk):
        ident = lambda w: np.asarray(w, dtype=complex) if np.ndim(w) else complex(w)  # noqa: E731
        return ident, ident, lambda w: np.ones_like(np.asarray(w, dtype=complex))
    raise TypeError(f"no Riemann map available for {domain!r}")


def reflect(target, z):
    """Reflect ``z`` across a circle, a line, or a level curve of a Riemann map.

    The level case is ``phi(rho**2 / conj(phi^-1(z)))`` and needs
    ``rho**2 < |phi^-1(z)| < 1``.
    """
    scalar = not np.ndim(z)
    z = np.asarray(z, dtype=complex)
    if isinstance(target, Circle):
        d = z - target.center
        if np.any(d == 0):
            raise ValueError("cannot reflect the centre of the circle")
        out = target.center + target.radius**2 / np.conj(d)
    elif isinstance(target, Line):
        u = complex(target.direction)
        if u == 0:
            raise ValueError("line direction must be nonzero")
        u /= abs(u)
        out = target.point + u * u * np.conj(z - target.point)
    elif isinstance(target, Level):
        phi, inv, _ = riemann_pair(target.domain)
        w = np.asarray(inv(z), dtype=complex)
        with np.errstate(invalid="ignore"):
            ok = (np.abs(w) > target.rho**2) & (np.abs(w) < 1)
        if not np.all(ok):
            raise OutsideCollar("reflected preimage would leave the unit disk")
        out = np.asarray(phi(target.rho**2 / np.conj(w)), dtype=complex)
    else:
        raise TypeError(f"unknown reflection target {target!r}")
    return complex(out) if scalar else out


class CollarReflection:
    """Mirror across the tangent line at the nearest point of a curve.

    Valid inside the tube ``dist(z, curve) < delta_c``; the nearest point is
    found from a k-d tree over dense samples and polished by golden-section
    search on the parameter.
    """

    neighbours = 8

    def __init__(self, curve: CurveSample, delta_c: float | None = None, dense: int = 4096):
        self.curve = curve
        self.delta_c = 0.1 * curve.diameter() if delta_c is None else float(delta_c)
        if self.delta_c <= 0:
            raise ValueError("collar width must be positive")
        m = max(dense, curve.points.size)
        self._t = curve.t[0] + curve.period * np.arange(m) / m
        self._p = curve.evaluate(self._t)[0]
        self._dt = curve.period / m
        self._tree = cKDTree(np.column_stack([self._p.real, self._p.imag]))

    def project(self, z):
        """Nearest points ``p``, unit tangents and distances for an array of ``z``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        _, idx = self._tree.query(np.column_stack([z.real, z.imag]), k=self.neighbours)
        cand_t = np.empty(idx.shape)
        cand_d = np.empty(idx.shape)
        for j in range(idx.shape[1]):
            t0 = self._t[idx[:, j]]
            t = golden_minimize(lambda tt: np.abs(z - self.curve.evaluate(tt)[0]), t0 - self._dt, t0 + self._dt)
            cand_t[:, j] = t
            cand_d[:, j] = np.abs(z - self.curve.evaluate(t)[0])
        best = np.argmin(cand_d, axis=1)
        rows = np.arange(z.size)
        t = cand_t[rows, best]
        d = cand_d[rows, best]
        # distinct local minima (parameters more than two samples apart) tying with the best
        sep = np.abs(np.angle(np.exp(1j * (cand_t - t[:, None]))))
        tie = (sep > 2 * self._dt) & (np.abs(cand_d - d[:, None]) < 1e-9)
        if np.any(tie):
            raise AmbiguousProjection("nearest-point projection is not unique; collar too wide")
        p, tan = self.curve.evaluate(t)
        return p, tan / np.abs(tan), d

    def __call__(self, z):
        scalar = not np.ndim(z)
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        p, tau, d = self.project(z)
        if np.any(d >= self.delta_c):
            raise OutsideCollar(f"point(s) further than {self.delta_c:.3g} from the curve")
        out = p + tau * tau * np.conj(z - p)
        return complex(out[0]) if scalar else out


def collar_reflect(curve: CurveSample, delta_c: float | None, z):
    return CollarReflection(curve, delta_c)(z)


# ---------------------------------------------------------------------------
# Beltrami coefficient


@dataclass(frozen=True)
class Beltrami:
    mu: np.ndarray | complex
    K: np.ndarray | float
    jacobian: np.ndarray | float


def beltrami(F: Callable, z, h_step: float = 1e-5, domain: HyperbolicDomain | None = None, strict: bool = True) -> Beltrami:
    """``mu = F_zbar / F_z`` and ``K = (1+|mu|)/(1-|mu|)`` from central differences.

    ``F`` must accept complex arrays. With ``strict=False`` orientation
    reversing points get ``K = nan`` instead of raising.
    """
    scalar = not np.ndim(z)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    stencil = [z + h_step, z - h_step, z + 1j * h_step, z - 1j * h_step]
    if domain is not None and not all(np.all(domain.contains(s)) for s in stencil):
        raise StencilOutsideDomain("finite-difference stencil leaves the domain")
    vals = [np.asarray(F(s), dtype=complex) for s in stencil]
    fx = (vals[0] - vals[1]) / (2 * h_step)
    fy = (vals[2] - vals[3]) / (2 * h_step)
    fz = (fx - 1j * fy) / 2
    fzb = (fx + 1j * fy) / 2
    with np.errstate(all="ignore"):
        mu = fzb / fz
    a = np.abs(mu)
    if np.any(a > 1):
        if strict:
            raise OrientationReversed(complex(mu[np.argmax(a)]))
    with np.errstate(all="ignore"):
        k = np.where(a < 1, (1 + a) / (1 - a), np.nan)
    jac = np.abs(fz) ** 2 - np.abs(fzb) ** 2
    if scalar:
        return Beltrami(complex(mu[0]), float(k[0]), float(jac[0]))
    return Beltrami(mu, k, jac)


def reflection_check(target, z) -> Check:
    """Involution residual ``|reflect(reflect(z)) - z|`` as a check at tolerance 1e-9."""
    back = reflect(target, reflect(target, z))
    res = np.abs(np.asarray(back) - np.asarray(z))
    k = int(np.argmax(res)) if np.ndim(res) else 0
    worst = float(np.max(res))
    wz = complex(np.ravel(np.asarray(z))[k])
    return Check("involution", worst, 1e-9, 1e-9 - worst, worst <= 1e-9, wz)
