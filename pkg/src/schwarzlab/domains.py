"""
Hyperbolic domains: density of the hyperbolic metric, boundary distance,
sampling grids and (for conformal quasidisks) the Riemann map and its inverse.

Normalisation: the unit disk carries ``lambda_D(z) = 1 / (1 - |z|**2)`` and
every other density is transferred from it through a (covering) map.

Simply connected variants are parameterised by a *reference disk*: the
sampling grid and the sup-norm refinement live there and are pushed forward
by :meth:`HyperbolicDomain.chart`. The annulus is its own reference region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NewtonDiverged, OutsideDomain
from .expr_lang import Expr, as_expr, eval_jet, evaluate, parse_expression, to_text

GOLDEN = (math.sqrt(5) - 1) / 2


def disk_density(w):
    w = np.asarray(w)
    with np.errstate(all="ignore"):
        return 1.0 / (1.0 - np.abs(w) ** 2)


@dataclass(frozen=True)
class ReferenceGrid:
    """Sampling grid in reference coordinates.

    ``ring`` is the radial index of each node (0 = innermost); ``spacing`` the
    local node spacing, used to size the first refinement window.
    """

    u: np.ndarray
    ring: np.ndarray
    spacing: np.ndarray
    n_rings: int


class HyperbolicDomain:
    """Common interface of all domain variants."""

    simply_connected = True
    margin: float = 1e-3

    # -- geometry ---------------------------------------------------------
    def contains(self, z):
        raise NotImplementedError

    def density(self, z):
        raise NotImplementedError

    def boundary_distance(self, z):
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    # -- reference chart ----------------------------------------------------
    def chart(self, u):
        return np.asarray(u, dtype=complex) if np.ndim(u) else complex(u)

    def chart_density(self, u):
        """Density at ``chart(u)``; overridden where this avoids an inversion."""
        return self.density(self.chart(u))

    def reference_contains(self, u):
        u = np.asarray(u)
        return np.abs(u) <= 1 - self.margin + 1e-15

    def reference_grid(self, n: int) -> ReferenceGrid:
        """``n`` radii times ``4n`` angles in the reference disk, plus its centre.

        Radii are equally spaced in hyperbolic distance up to ``1 - margin``
        so the grid resolves the boundary layer where norms are approached.
        """
        big_r = math.atanh(1 - self.margin)
        radii = np.tanh(big_r * np.arange(1, n + 1) / n)
        m = 4 * n
        theta = 2 * np.pi * np.arange(m) / m
        rr, tt = np.meshgrid(radii, theta, indexing="ij")
        u = np.concatenate([[0j], (rr * np.exp(1j * tt)).ravel()])
        ring = np.concatenate([[0], np.repeat(np.arange(1, n + 1), m)])
        dr = np.diff(np.concatenate([[0.0], radii]))
        sp = np.maximum(dr[:, None], rr * (2 * np.pi / m)).ravel()
        spacing = np.concatenate([[dr[0]], sp])
        return ReferenceGrid(u, ring, spacing, n + 1)

    def sample(self, n: int):
        return self.chart(self.reference_grid(n).u)

    def random_points(self, count: int, rng: np.random.Generator, max_radius: float = 0.95):
        """Random interior points: uniform in the reference disk of radius ``max_radius``."""
        r = max_radius * np.sqrt(rng.uniform(size=count))
        t = rng.uniform(0, 2 * np.pi, size=count)
        return self.chart(r * np.exp(1j * t))

    def koebe_margin(self, z):
        """``d(z) * lambda(z)``; lies in ``[1/4, 1]`` on simply connected domains."""
        if not self.simply_connected:
            raise ValueError("the Koebe window only applies to simply connected domains")
        return self.boundary_distance(z) * self.density(z)

    def _require_inside(self, z):
        if not np.all(self.contains(z)):
            raise OutsideDomain(f"point(s) outside {self.spec()}")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec()!r})"


class UnitDisk(HyperbolicDomain):
    def contains(self, z):
        return np.abs(np.asarray(z)) < 1

    def density(self, z):
        self._require_inside(z)
        return disk_density(z)

    def boundary_distance(self, z):
        self._require_inside(z)
        return 1 - np.abs(np.asarray(z))

    def chart_density(self, u):
        return disk_density(u)

    def spec(self) -> str:
        return "disk"


class HalfPlane(HyperbolicDomain):
    """Upper half-plane, charted from the disk by ``u -> i (1 + u) / (1 - u)``."""

    def contains(self, z):
        return np.asarray(z).imag > 0

    def density(self, z):
        self._require_inside(z)
        return 1 / (2 * np.asarray(z).imag)

    def boundary_distance(self, z):
        self._require_inside(z)
        return np.asarray(z).imag * 1.0

    def chart(self, u):
        u = np.asarray(u, dtype=complex)
        out = 1j * (1 + u) / (1 - u)
        return out if out.ndim else complex(out)

    def chart_density(self, u):
        return 1 / (2 * np.asarray(self.chart(u)).imag)

    def spec(self) -> str:
        return "halfplane"


@dataclass(repr=False)
class Annulus(HyperbolicDomain):
    """``rho < |z| < 1``; density from the strip covering ``w -> exp(i c w)``."""

    rho: float
    margin: float = 1e-3
    simply_connected = False

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError("annulus inner radius must lie in (0, 1)")

    @property
    def log_modulus(self) -> float:
        return math.log(1 / self.rho)

    def contains(self, z):
        a = np.abs(np.asarray(z))
        return (a > self.rho) & (a < 1)

    def density(self, z):
        self._require_inside(z)
        a = np.abs(np.asarray(z))
        big_l = self.log_modulus
        return math.pi / (2 * big_l * a * np.sin(math.pi * np.log(1 / a) / big_l))

    def boundary_distance(self, z):
        self._require_inside(z)
        a = np.abs(np.asarray(z))
        return np.minimum(a - self.rho, 1 - a)

    def _s(self, u):
        return np.log(1 / np.abs(np.asarray(u))) / self.log_modulus

    def reference_contains(self, u):
        s = self._s(u)
        return (s >= self.margin - 1e-15) & (s <= 1 - self.margin + 1e-15)

    def reference_grid(self, n: int) -> ReferenceGrid:
        # equally spaced in the hyperbolic coordinate across the strip
        t_max = math.log(math.tan(math.pi * (1 - self.margin) / 2)) / math.pi
        tau = np.linspace(-t_max, t_max, n)
        s = (2 / math.pi) * np.arctan(np.exp(math.pi * tau))
        radii = np.exp(-s * self.log_modulus)
        m = 4 * n
        theta = 2 * np.pi * np.arange(m) / m
        rr, tt = np.meshgrid(radii, theta, indexing="ij")
        u = (rr * np.exp(1j * tt)).ravel()
        # rings counted from the middle outwards so both boundaries are "outermost"
        centre = (n - 1) / 2
        ring_of_radius = np.round(np.abs(np.arange(n) - centre)).astype(int)
        ring = np.repeat(ring_of_radius, m)
        dr = np.abs(np.gradient(radii)) if n > 1 else np.array([1 - self.rho])
        sp = np.maximum(dr[:, None], rr * (2 * np.pi / m)).ravel()
        return ReferenceGrid(u, ring, sp, int(ring_of_radius.max()) + 1)

    def random_points(self, count, rng, max_radius=None):
        s = rng.uniform(0.02, 0.98, size=count)
        t = rng.uniform(0, 2 * np.pi, size=count)
        return np.exp(-s * self.log_modulus) * np.exp(1j * t)

    def spec(self) -> str:
        return f"annulus:{self.rho!r}"


class ConformalQuasidisk(HyperbolicDomain):
    """Image ``phi(D)`` of the unit disk under a univalent expression ``phi``.

    ``phi`` must be univalent on a neighbourhood of the closed disk; the
    boundary is sampled on ``|w| = 1``.
    """

    seed_size = 64
    boundary_samples = 4096

    def __init__(self, phi, margin: float = 1e-3):
        self.phi: Expr = as_expr(phi)
        self.margin = margin
        r = (np.arange(self.seed_size) + 0.5) / self.seed_size * 0.999
        t = 2 * np.pi * np.arange(self.seed_size) / self.seed_size
        seeds = np.concatenate([[0j], (r[:, None] * np.exp(1j * t[None, :])).ravel()])
        self._seeds = seeds
        self._seed_values = evaluate(self.phi, seeds)
        self._bt = 2 * np.pi * np.arange(self.boundary_samples) / self.boundary_samples
        self._bz = self.boundary_point(self._bt)
        if not np.all(np.isfinite(self._bz)):
            raise ValueError("phi must be finite on the closed unit disk")

    def boundary_point(self, t):
        return evaluate(self.phi, np.exp(1j * np.asarray(t, dtype=float)))

    def chart(self, u):
        return evaluate(self.phi, u)

    def chart_density(self, u):
        jp = eval_jet(self.phi, u)
        return disk_density(u) / np.abs(jp.f1)

    def invert_riemann(self, w, strict: bool = True, tol: float = 1e-13, max_iter: int = 100):
        """Solve ``phi(z) = w`` by Newton iteration from the nearest seed-grid node."""
        scalar = not np.ndim(w)
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        z = np.empty_like(w)
        for lo in range(0, w.size, 2048):
            chunk = w[lo : lo + 2048]
            idx = np.argmin(np.abs(chunk[:, None] - self._seed_values[None, :]), axis=1)
            z[lo : lo + 2048] = self._seeds[idx]
        done = np.zeros(w.shape, dtype=bool)
        for _ in range(max_iter):
            jp = eval_jet(self.phi, z, strict=False)
            res = jp.f0 - w
            done = np.abs(res) <= tol * np.maximum(1.0, np.abs(w))
            if np.all(done):
                break
            with np.errstate(all="ignore"):
                step = res / jp.f1
            step = np.where(done | ~np.isfinite(step), 0, step)
            # damp steps that would leave a generous neighbourhood of the disk
            new = z - step
            for _k in range(30):
                far = np.abs(new) > 2.0
                if not np.any(far):
                    break
                step = np.where(far, step / 2, step)
                new = z - step
            z = new
        else:
            jp = eval_jet(self.phi, z, strict=False)
            done = np.abs(jp.f0 - w) <= 1e3 * tol * np.maximum(1.0, np.abs(w))
        if not np.all(done):
            if strict:
                raise NewtonDiverged(f"inversion of {to_text(self.phi)} did not converge in {max_iter} steps")
            z = np.where(done, z, np.nan)
        return complex(z[0]) if scalar else z

    def contains(self, z):
        pre = self.invert_riemann(z, strict=False)
        with np.errstate(invalid="ignore"):
            return np.abs(pre) < 1

    def _preimage_inside(self, z):
        pre = self.invert_riemann(z, strict=False)
        if not np.all(np.abs(pre) < 1):
            raise OutsideDomain(f"point(s) outside {self.spec()}")
        return pre

    def density(self, z):
        return self.chart_density(self._preimage_inside(z))

    def boundary_distance(self, z, polish_iter: int = 60):
        """Distance to ``phi(|w| = 1)``: dense sweep, then golden-section polish."""
        self._preimage_inside(z)
        scalar = not np.ndim(z)
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape)
        dt = self._bt[1] - self._bt[0]
        for lo in range(0, z.size, 256):
            zc = z[lo : lo + 256]
            k = np.argmin(np.abs(zc[:, None] - self._bz[None, :]), axis=1)
            t = golden_minimize(
                lambda tt: np.abs(zc - self.boundary_point(tt)), self._bt[k] - dt, self._bt[k] + dt, polish_iter
            )
            out[lo : lo + 256] = np.abs(zc - self.boundary_point(t))
        return float(out[0]) if scalar else out

    def spec(self) -> str:
        return f"quasidisk:{to_text(self.phi)}"


def golden_minimize(fun, a, b, iterations: int = 60):
    """Vectorised golden-section search; ``a``, ``b`` are arrays of brackets."""
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iterations):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = b - GOLDEN * (b - a)
        d_new = a + GOLDEN * (b - a)
        c, d = c_new, d_new
        fc, fd = fun(c), fun(d)
    return np.where(fc < fd, c, d)


def parse_domain(spec: str, margin: float = 1e-3) -> HyperbolicDomain:
    """Build a domain from ``disk``, ``halfplane``, ``annulus:RHO`` or ``quasidisk:EXPR``."""
    spec = spec.strip()
    if spec == "disk":
        d = UnitDisk()
        d.margin = margin
        return d
    if spec == "halfplane":
        d = HalfPlane()
        d.margin = margin
        return d
    if spec.startswith("annulus:"):
        return Annulus(float(spec.split(":", 1)[1]), margin=margin)
    if spec.startswith("quasidisk:"):
        return ConformalQuasidisk(parse_expression(spec.split(":", 1)[1]), margin=margin)
    raise ValueError(
        f"unknown domain spec {spec!r}; expected disk, halfplane, annulus:RHO or quasidisk:EXPR"
    )
