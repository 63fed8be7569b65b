"""Logarithmic potentials, conformal factors and derived quantities.

The potential of a signed measure is

    p(z; omega) = (1/2pi) * int ln|z - zeta| d omega(zeta)

and the conformal factor of the scene ``(omega, h)`` is
``lambda = exp(-2 (p + h))``.  All evaluators accept scalars or numpy arrays
of complex points.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.ndimage import map_coordinates, spline_filter
from scipy.signal import fftconvolve

from ._kernels import TWO_PI, gauss_legendre, rect_log_gradient, rect_log_integral, rect_power_moments
from .measure import Domain, GridDensity, HarmonicPoly, SignedMeasure, jordan_parts, restrict_to_disc

__all__ = [
    "UNDEFINED",
    "Derivation",
    "MetricScene",
    "potential_eval",
    "grad_potential",
    "lambda_eval",
    "mollify",
    "bump",
    "weak_laplacian_residual",
    "weak_laplacian_residual_fn",
    "LocalizeResult",
    "localize",
    "conjugate_diff",
    "QuadratureWarning",
]

UNDEFINED = float("nan")


class QuadratureWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# grid densities: closed-form near field, multipole far field

_TILE = 8
_TILE_ORDER = 20
_TOP_ORDER = 40


class _GridCache:
    def __init__(self, g: GridDensity):
        self.g = g
        h = g.cell
        ny, nx = g.shape
        dens = g.masses / (h * h)
        self.dens = dens
        x0, y0, x1, y1 = g.extent()
        self.center = complex((x0 + x1) / 2, (y0 + y1) / 2)
        self.half_diag = 0.5 * math.hypot(x1 - x0, y1 - y0)
        corners = g.origin + h * (np.arange(nx)[None, :] + 1j * np.arange(ny)[:, None])
        self.top = self._moments(corners, dens, self.center, _TOP_ORDER)
        self.tiles = []
        for ty in range(0, ny, _TILE):
            for tx in range(0, nx, _TILE):
                sl = (slice(ty, min(ty + _TILE, ny)), slice(tx, min(tx + _TILE, nx)))
                d = dens[sl]
                if not np.any(d):
                    continue
                c00 = corners[sl]
                lo = c00[0, 0]
                hi = c00[-1, -1] + h * (1 + 1j)
                tc = (lo + hi) / 2
                hd = abs(hi - lo) / 2
                mom = self._moments(c00, d, tc, _TILE_ORDER)
                self.tiles.append((tc, hd, mom, c00.ravel(), d.ravel()))

    def _moments(self, c00, dens, center, order):
        h = self.g.cell
        mom = np.zeros(order + 1, dtype=complex)
        flat_c = c00.ravel() - center
        flat_d = dens.ravel()
        keep = flat_d != 0
        flat_c, flat_d = flat_c[keep], flat_d[keep]
        if flat_c.size == 0:
            return mom
        per = rect_power_moments(flat_c, h, order)  # (order+1, ncells)
        return per @ flat_d

    @staticmethod
    def _multipole(z, center, mom):
        w = 1.0 / (z - center)
        series = np.zeros_like(w)
        for k in range(len(mom) - 1, 0, -1):
            series = (series + mom[k] / k) * w
        return (mom[0] * np.log(z - center) - series).real / TWO_PI

    @staticmethod
    def _multipole_grad(z, center, mom):
        w = 1.0 / (z - center)
        series = np.zeros_like(w)
        for k in range(len(mom) - 1, -1, -1):
            series = (series + mom[k]) * w
        return np.conj(series) / TWO_PI

    def _direct(self, z, c00, d):
        h = self.g.cell
        u0 = c00.real[None, :] - z.real[:, None]
        v0 = c00.imag[None, :] - z.imag[:, None]
        val = rect_log_integral(u0, u0 + h, v0, v0 + h)
        return (val @ d) / TWO_PI

    def _direct_grad(self, z, c00, d):
        h = self.g.cell
        u0 = c00.real[None, :] - z.real[:, None]
        v0 = c00.imag[None, :] - z.imag[:, None]
        val = rect_log_gradient(u0, u0 + h, v0, v0 + h)
        return (val @ d) / TWO_PI

    def evaluate(self, z, grad=False):
        z = np.asarray(z, dtype=complex).ravel()
        out = np.zeros(z.shape, dtype=complex if grad else float)
        far = np.abs(z - self.center) > 2.0 * self.half_diag
        if np.any(far):
            f = self._multipole_grad if grad else self._multipole
            out[far] = f(z[far], self.center, self.top)
        near_idx = np.nonzero(~far)[0]
        if near_idx.size == 0:
            return out
        zn = z[near_idx]
        acc = np.zeros(zn.shape, dtype=out.dtype)
        for tc, hd, mom, c00, d in self.tiles:
            dist = np.abs(zn - tc)
            tfar = dist > 3.0 * hd
            if np.any(tfar):
                f = self._multipole_grad if grad else self._multipole
                acc[tfar] += f(zn[tfar], tc, mom)
            tn = np.nonzero(~tfar)[0]
            for s in range(0, tn.size, 4096):
                idx = tn[s:s + 4096]
                f = self._direct_grad if grad else self._direct
                acc[idx] += f(zn[idx], c00, d)
        out[near_idx] = acc
        return out

    def _build_table(self):
        # exact potential/gradient at cell-centre nodes (FFT convolution of
        # the closed-form cell kernels), spline-interpolated in between
        g = self.g
        h = g.cell
        ny, nx = g.shape
        half = max(nx, ny) * h / 2
        pad = int(math.ceil((2.0 * self.half_diag - half) / h)) + 8
        D = np.pad(self.dens, pad)
        Ny, Nx = D.shape
        ay = np.arange(-(Ny - 1), Ny) * h
        ax = np.arange(-(Nx - 1), Nx) * h
        u0 = ax[None, :] - h / 2
        v0 = ay[:, None] - h / 2
        kv = rect_log_integral(u0, u0 + h, v0, v0 + h) / TWO_PI
        val = fftconvolve(D, kv[::-1, ::-1], mode="full")[Ny - 1:2 * Ny - 1, Nx - 1:2 * Nx - 1]
        self.t_origin = g.origin + h * (0.5 + 0.5j) - pad * h * (1 + 1j)
        self.t_val = spline_filter(val, order=3, mode="nearest")

    def fast(self, z, grad=False):
        """Table-interpolated version of :meth:`evaluate`.

        The gradient is the derivative of the interpolant itself (central
        differences on the spline), so values and gradients stay consistent.
        """
        if not hasattr(self, "t_val"):
            self._build_table()
        z = np.asarray(z, dtype=complex).ravel()
        out = np.zeros(z.shape, dtype=complex if grad else float)
        far = np.abs(z - self.center) > 2.0 * self.half_diag
        if np.any(far):
            f = self._multipole_grad if grad else self._multipole
            out[far] = f(z[far], self.center, self.top)
        near = ~far
        if np.any(near):
            w = (z[near] - self.t_origin) / self.g.cell
            coords = np.vstack([w.imag, w.real])
            if grad:
                e = 1e-4
                f = lambda c: map_coordinates(self.t_val, c, order=3, mode="nearest", prefilter=False)
                dy = np.array([[e], [0.0]])
                dx = np.array([[0.0], [e]])
                gx = (f(coords + dx) - f(coords - dx)) / (2 * e * self.g.cell)
                gy = (f(coords + dy) - f(coords - dy)) / (2 * e * self.g.cell)
                out[near] = gx + 1j * gy
            else:
                out[near] = map_coordinates(self.t_val, coords, order=3, mode="nearest", prefilter=False)
        return out


def _grid_cache(g: GridDensity) -> _GridCache:
    cache = g.__dict__.get("_cache")
    if cache is None:
        cache = _GridCache(g)
        object.__setattr__(g, "_cache", cache)
    return cache


# --------------------------------------------------------------------------
# potentials


def _smooth_potential(z, m: SignedMeasure, fast: bool = False):
    """Potential of every component except the atoms (always finite)."""
    out = np.zeros(z.shape, dtype=float)
    for c, r, mass in m.circle_densities:
        d = np.abs(z - c)
        out += mass / TWO_PI * np.log(np.maximum(d, r))
    for c, R, mass in m.disc_densities:
        d = np.abs(z - c)
        with np.errstate(divide="ignore"):
            outside = np.log(np.where(d > R, d, R))
        inside = math.log(R) + (d * d - R * R) / (2 * R * R)
        out += mass / TWO_PI * np.where(d > R, outside, inside)
    if m.grid is not None:
        gc = _grid_cache(m.grid)
        out += (gc.fast(z) if fast else gc.evaluate(z)).reshape(z.shape)
    return out


def _atom_potential_parts(z, m: SignedMeasure):
    pos = np.zeros(z.shape, dtype=float)
    neg = np.zeros(z.shape, dtype=float)
    with np.errstate(divide="ignore"):
        for p, w in m.atoms:
            term = abs(w) / TWO_PI * np.log(np.abs(z - p))
            if w > 0:
                pos += term
            else:
                neg += term
    return pos, neg


def potential_eval(z, m: SignedMeasure):
    """``p(z; m)``; ``-inf``/``+inf`` at positive/negative atoms.

    Points where both a positive and a negative part are infinite give
    :data:`UNDEFINED` (nan).
    """
    za = np.asarray(z, dtype=complex)
    pos, neg = _atom_potential_parts(za, m)
    with np.errstate(invalid="ignore"):
        out = pos - neg + _smooth_potential(za, m)
    return float(out) if out.ndim == 0 else out


def grad_potential(z, m: SignedMeasure, atoms: bool = True, fast: bool = False):
    """Gradient ``p_x + i p_y`` of the potential (infinite at atoms)."""
    za = np.asarray(z, dtype=complex)
    out = np.zeros(za.shape, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        if atoms:
            for p, w in m.atoms:
                d = za - p
                out += w / TWO_PI * d / (d.real ** 2 + d.imag ** 2)
        for c, r, mass in m.circle_densities:
            d = za - c
            a2 = d.real ** 2 + d.imag ** 2
            out += np.where(a2 > r * r, mass / TWO_PI * d / np.where(a2 > 0, a2, 1.0), 0.0)
        for c, R, mass in m.disc_densities:
            d = za - c
            a2 = d.real ** 2 + d.imag ** 2
            out += mass / TWO_PI * d / np.where(a2 > R * R, a2, R * R)
    if m.grid is not None:
        gc = _grid_cache(m.grid)
        out += (gc.fast(za, grad=True) if fast else gc.evaluate(za, grad=True)).reshape(za.shape)
    return complex(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# scenes


@dataclass(frozen=True)
class Derivation:
    """``lambda'(z) = scale * |g'(z)|^2 * lambda_base(g(z))`` for a polynomial ``g``."""

    base: "MetricScene"
    g: tuple
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(complex(a) for a in self.g))
        object.__setattr__(self, "scale", float(self.scale))
        if not self.scale > 0:
            raise ValueError("derivation scale must be positive")

    def map(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), self.g)

    def dmap(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), np.polynomial.polynomial.polyder(self.g))

    def d2map(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), np.polynomial.polynomial.polyder(self.g, 2))

    def preimages(self, w) -> np.ndarray:
        c = np.array(self.g, dtype=complex)
        c[0] -= w
        if len(c) == 2:
            return np.array([-c[0] / c[1]])
        return np.polynomial.polynomial.polyroots(c)


@dataclass(frozen=True)
class MetricScene:
    """A plane domain with the subharmonic metric ``lambda(omega, h) |dz|^2``.

    A derived scene ignores its own ``measure``/``harmonic`` and evaluates
    lambda through ``derivation``.
    """

    domain: Domain
    measure: SignedMeasure = SignedMeasure()
    harmonic: HarmonicPoly = HarmonicPoly()
    derivation: Optional[Derivation] = None

    @property
    def is_derived(self) -> bool:
        return self.derivation is not None

    def log_sqrt_lambda(self, z):
        """``ln sqrt(lambda) = -(p + h)``, vectorized; nan where undefined."""
        za = np.asarray(z, dtype=complex)
        if self.derivation is not None:
            dv = self.derivation
            with np.errstate(divide="ignore"):
                jac = np.log(np.abs(dv.dmap(za)))
            out = 0.5 * math.log(dv.scale) + jac + dv.base.log_sqrt_lambda(dv.map(za))
        else:
            pos, neg = _atom_potential_parts(za, self.measure)
            with np.errstate(invalid="ignore"):
                out = -(pos - neg) - _smooth_potential(za, self.measure, fast=True) - self.harmonic(za)
        return float(out) if np.ndim(out) == 0 else out

    def grad_log_sqrt_lambda(self, z):
        za = np.asarray(z, dtype=complex)
        if self.derivation is not None:
            dv = self.derivation
            d1 = dv.dmap(za)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.conj(dv.d2map(za) / d1) + np.conj(d1) * dv.base.grad_log_sqrt_lambda(dv.map(za))
        else:
            out = -grad_potential(za, self.measure, fast=True) - self.harmonic.gradient(za)
        return complex(out) if np.ndim(out) == 0 else out

    def lam(self, z):
        with np.errstate(over="ignore"):
            return np.exp(2.0 * self.log_sqrt_lambda(z))

    def sqrt_lam(self, z):
        with np.errstate(over="ignore"):
            return np.exp(self.log_sqrt_lambda(z))

    def singularities(self):
        """Atoms of the curvature measure in this scene's coordinates as ``(pos, weight)``.

        For derived scenes these are the preimages, inside the domain, of
        the base atoms (same weight, since ``g`` is locally conformal there).
        """
        if self.derivation is None:
            return list(self.measure.atoms)
        out = []
        dv = self.derivation
        for p, w in dv.base.singularities():
            for q in dv.preimages(p):
                if abs(q - self.domain.center) < self.domain.radius * (1 + 1e-9):
                    out.append((complex(q), w))
        return out

    def point_mass(self, z, tol: float = 1e-12) -> float:
        """``omega({z})`` in this scene's coordinates."""
        if self.derivation is None:
            return self.measure.atom_mass(z, tol=tol)
        dv = self.derivation
        zz = complex(z)
        if abs(complex(dv.dmap(zz))) == 0.0:
            raise ValueError("derivation map is not conformal at this point")
        return dv.base.point_mass(complex(dv.map(zz)), tol=tol * max(1.0, abs(complex(dv.dmap(zz)))))

    def positive_point_mass(self, z, tol: float = 1e-12) -> float:
        pos = [w for p, w in self.singularities() if w > 0 and abs(p - z) <= tol]
        return float(sum(pos))

    def is_positive_measure(self) -> bool:
        if self.derivation is not None:
            return self.derivation.base.is_positive_measure()
        return jordan_parts(self.measure)[1].is_empty()

    def require_base(self, what: str):
        if self.derivation is not None:
            raise ValueError(f"{what} needs an underived scene (measure and harmonic term explicit)")


def lambda_eval(z, scene: MetricScene):
    """``lambda(z) = exp(-2(p(z) + h(z)))`` through any derivation wrapper."""
    return scene.lam(z)


def conjugate_diff(h: HarmonicPoly, z1, z2) -> float:
    """``h*(z1) - h*(z2)``, the flux of ``h`` through an arc from ``z1`` to ``z2``."""
    return float(h.conjugate(complex(z1)) - h.conjugate(complex(z2)))


# --------------------------------------------------------------------------
# mollification


def bump(s):
    """Unnormalized radial bump ``exp(1/(s^2 - 1))`` on ``s < 1``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 / (s[inside] ** 2 - 1.0))
    return out


def _component_cloud(m: SignedMeasure, spacing: float):
    pts, wts = [], []
    for p, w in m.atoms:
        pts.append(np.array([p]))
        wts.append(np.array([w]))
    for c, R, mass in m.disc_densities:
        n = max(16, int(math.ceil(2 * R / spacing)) * 2)
        xs = -R + (np.arange(n) + 0.5) * (2 * R / n)
        z = xs[None, :] + 1j * xs[:, None]
        z = z[np.abs(z) < R].ravel()
        pts.append(c + z)
        wts.append(np.full(z.size, mass / z.size))
    for c, r, mass in m.circle_densities:
        n = max(64, int(math.ceil(TWO_PI * r / spacing)) * 4)
        t = (np.arange(n) + 0.5) * (TWO_PI / n)
        pts.append(c + r * np.exp(1j * t))
        wts.append(np.full(n, mass / n))
    if m.grid is not None:
        g = m.grid
        k = 4
        sub = (np.arange(k) + 0.5) / k * g.cell
        off = (sub[None, :] + 1j * sub[:, None]).ravel()
        cen = (g.origin + g.cell * (np.arange(g.shape[1])[None, :] + 1j * np.arange(g.shape[0])[:, None])).ravel()
        pts.append((cen[:, None] + off[None, :]).ravel())
        wts.append(np.repeat(g.masses.ravel() / (k * k), k * k))
    if not pts:
        return np.zeros(0, dtype=complex), np.zeros(0)
    return np.concatenate(pts), np.concatenate(wts)


def mollify(m: SignedMeasure, h_scale: float, grid_n: int = 64, sub: int = 4) -> SignedMeasure:
    """Convolve ``m`` with the normalized radial bump of radius ``h_scale``.

    The result is a grid density of ``grid_n x grid_n`` cells covering the
    support enlarged by ``h_scale``. Mass is conserved by construction:
    the measure is deposited with cloud-in-cell weights on a ``sub``-times
    finer lattice, convolved with a kernel normalized to unit sum, and the
    fine lattice is summed back onto the cells.
    """
    if not h_scale > 0:
        raise ValueError("h_scale must be positive")
    c, rad = m.bounding_disc()
    half = rad + h_scale
    side = 2.0 * half
    cell = side / grid_n
    margin = 2.0 * cell
    side += 2 * margin
    cell = side / grid_n
    if cell > h_scale / 2:
        raise ValueError(
            f"grid too coarse: cell {cell:.4g} exceeds h_scale/2 = {h_scale / 2:.4g}; increase grid_n"
        )
    origin = c - (side / 2) * (1 + 1j)
    if m.is_empty():
        return SignedMeasure(grid=None)
    nf = grid_n * sub
    fine = side / nf
    pts, wts = _component_cloud(m, fine / 2)
    # cloud in cell onto the fine lattice, nodes at fine-cell centres
    gx = (pts.real - origin.real) / fine - 0.5
    gy = (pts.imag - origin.imag) / fine - 0.5
    ix = np.floor(gx).astype(int)
    iy = np.floor(gy).astype(int)
    fx = gx - ix
    fy = gy - iy
    acc = np.zeros((nf, nf))
    for dx, dy, wgt in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)), (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        np.add.at(acc, (np.clip(iy + dy, 0, nf - 1), np.clip(ix + dx, 0, nf - 1)), wts * wgt)
    kr = int(math.ceil(h_scale / fine))
    off = np.arange(-kr, kr + 1) * fine
    kz = np.abs(off[None, :] + 1j * off[:, None]) / h_scale
    kern = bump(kz)
    kern /= kern.sum()
    smooth = fftconvolve(acc, kern, mode="same")
    masses = smooth.reshape(grid_n, sub, grid_n, sub).sum(axis=(1, 3))
    # restore exact total (fft round-off only)
    tot = m.total_mass()
    s = masses.sum()
    if s != 0 and tot != 0:
        masses *= tot / s
    return SignedMeasure(grid=GridDensity(origin, cell, masses))


# --------------------------------------------------------------------------
# weak Laplacian


def _bump_and_laplacian(z, center, radius):
    s = np.abs(np.asarray(z) - center) / radius
    phi = np.zeros(s.shape)
    lap = np.zeros(s.shape)
    inside = s < 1.0
    si = s[inside]
    q = 1.0 - si * si
    f = np.exp(-1.0 / q)
    g1 = -2.0 * si / q ** 2
    g2 = -2.0 / q ** 2 - 8.0 * si * si / q ** 3
    phi[inside] = f
    lap[inside] = f * (g1 * g1 + g2 - 2.0 / q ** 2) / radius ** 2
    return phi, lap


def _polar_rule(center, radius, about, level: int, grading: float = 1.0):
    """Quadrature nodes/weights covering the disc ``Q_radius(center)`` in polar
    coordinates about the interior point ``about`` with ``r = R(theta) u**grading``.
    """
    nt = 32 * 2 ** level
    nu = 16 * 2 ** level
    th = (np.arange(nt) + 0.5) * (TWO_PI / nt)
    e = np.exp(1j * th)
    d = about - center
    b = (np.conj(d) * e).real
    R = -b + np.sqrt(b * b - abs(d) ** 2 + radius * radius)
    u, wu = gauss_legendre(nu)
    k = grading
    r = R[:, None] * u[None, :] ** k
    jac = r * R[:, None] * k * u[None, :] ** (k - 1)
    z = about + r * e[:, None]
    w = jac * wu[None, :] * (TWO_PI / nt)
    return z.ravel(), w.ravel()


def _disc_rule(center, radius, level: int):
    return _polar_rule(center, radius, center, level, 1.0)


def _target_integral(m: SignedMeasure, center, radius, level):
    """``int phi d m`` for the standard bump on ``Q_radius(center)``."""
    tot = 0.0
    for p, w in m.atoms:
        tot += w * _bump_and_laplacian(np.array([p]), center, radius)[0][0]
    for c, R, mass in m.disc_densities:
        if abs(c - center) >= R + radius:
            continue
        z, w = _disc_rule(c, R, level + 1)
        tot += mass / (math.pi * R * R) * float(np.dot(_bump_and_laplacian(z, center, radius)[0], w))
    for c, r, mass in m.circle_densities:
        n = 64 * 2 ** level
        t = (np.arange(n) + 0.5) * (TWO_PI / n)
        tot += mass * float(np.mean(_bump_and_laplacian(c + r * np.exp(1j * t), center, radius)[0]))
    if m.grid is not None:
        g = m.grid
        x, wx = gauss_legendre(4)
        off = (x[None, :] + 1j * x[:, None]).ravel() * g.cell
        ww = (wx[None, :] * wx[:, None]).ravel()
        cen = g.origin + g.cell * (np.arange(g.shape[1])[None, :] + 1j * np.arange(g.shape[0])[:, None])
        near = np.abs(cen + g.cell * (0.5 + 0.5j) - center) < radius + g.cell
        corners = cen[near]
        masses = g.masses[near]
        vals = _bump_and_laplacian(corners[:, None] + off[None, :], center, radius)[0]
        tot += float(np.sum(masses * (vals @ ww)))
    return tot


def _check_bump(domain: Domain, center, radius):
    if not radius > 0:
        raise ValueError("bump radius must be positive")
    if not domain.contains_closed_disc(complex(center), radius):
        raise ValueError("bump support must lie strictly inside the domain")


def _lhs_integral(scene: MetricScene, center, radius, level):
    m = scene.measure
    smooth = SignedMeasure((), m.disc_densities, m.circle_densities, m.grid)
    z, w = _disc_rule(center, radius, level)
    _, lap = _bump_and_laplacian(z, center, radius)
    u = _smooth_potential(z, smooth) + scene.harmonic(z)
    total = float(np.dot(u * lap, w))
    for p, wt in m.atoms:
        if abs(p - center) < radius:
            zz, ww = _polar_rule(center, radius, p, level, 3.0)
        else:
            zz, ww = z, w
        _, lp = _bump_and_laplacian(zz, center, radius)
        with np.errstate(divide="ignore", invalid="ignore"):
            term = wt / TWO_PI * np.log(np.abs(zz - p)) * lp
        total += float(np.dot(np.where(lp == 0, 0.0, term), ww))
    return total


def weak_laplacian_residual(scene: MetricScene, center, radius: float, level: int = 2, full_output: bool = False):
    """``| int (-1/2 ln lambda) Laplacian(phi) - int phi d omega |`` for the standard bump.

    ``phi(z) = exp(-1/(1 - |z-center|^2/radius^2))``. The logarithmic
    singularity of each atom inside the bump is integrated in polar
    coordinates about the atom. The quadrature error is estimated by
    comparing with the next refinement level; with ``full_output`` the pair
    ``(residual, error_estimate)`` is returned.
    """
    scene.require_base("weak_laplacian_residual")
    center = complex(center)
    _check_bump(scene.domain, center, radius)
    target = _target_integral(scene.measure, center, radius, level)
    lhs = _lhs_integral(scene, center, radius, level)
    lhs_fine = _lhs_integral(scene, center, radius, level + 1)
    est = abs(lhs_fine - lhs)
    scale = max(1.0, abs(target))
    if est > 1e-3 * scale:
        warnings.warn(f"weak Laplacian quadrature not converged (estimate {est:.3g})", QuadratureWarning)
    res = abs(lhs - target)
    return (res, est) if full_output else res


def weak_laplacian_residual_fn(
    u,
    center,
    radius: float,
    atoms=(),
    density=None,
    singular_point=None,
    grading: float = 3.0,
    level: int = 2,
):
    """Weak-Laplacian residual for a function ``u = -1/2 ln lambda`` given directly.

    The target measure is ``sum w delta_zeta`` over ``atoms`` plus
    ``density(z) dA``. ``singular_point`` (at most one inside the bump) is
    where ``u`` or ``density`` is singular; integrals are then taken in polar
    coordinates about it with radial grading ``r ~ u**grading``.
    """
    center = complex(center)
    about = center if singular_point is None else complex(singular_point)
    if abs(about - center) >= radius:
        about = center
    g = grading if about != center or singular_point is not None else 1.0
    z, w = _polar_rule(center, radius, about, level, g)
    phi, lap = _bump_and_laplacian(z, center, radius)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(u(z), dtype=float) * lap
    lhs = float(np.dot(np.where(lap == 0, 0.0, vals), w))
    target = 0.0
    for p, wt in atoms:
        target += wt * _bump_and_laplacian(np.array([complex(p)]), center, radius)[0][0]
    if density is not None:
        gd = g
        if singular_point is not None and abs(complex(singular_point) - center) < radius:
            gd = grading
        zd, wd = _polar_rule(center, radius, about, level, gd)
        phid, _ = _bump_and_laplacian(zd, center, radius)
        target += float(np.dot(np.asarray(density(zd), dtype=float) * phid, wd))
    return abs(lhs - target)


# --------------------------------------------------------------------------
# localization


class LocalizeResult(NamedTuple):
    measure: SignedMeasure
    k: float
    residual: float
    psi_atoms: tuple


ETA = 0.5


def localize(scene: MetricScene, z0, r: float, n_segments: int = 512, n_sample: int = 41, tol: float = 1e-4):
    """Replace the outside of ``Q_r(z0)`` by a measure on a circle.

    Returns ``(omega_tilde, k, residual)`` (plus the circle atoms) with
    ``p(omega, h) = p(omega_tilde) + k`` on ``Q_r(z0)`` up to ``residual``.
    ``omega_tilde`` is ``omega`` restricted to ``Q_{3r/2}(z0)`` plus
    ``n_segments`` atoms on the circle of radius ``5r/4`` carrying
    ``-2 * flux`` of the harmonic remainder through each arc.
    """
    scene.require_base("localize")
    z0 = complex(z0)
    if not r > 0:
        raise ValueError("radius must be positive")
    outer = r * (1 + ETA)
    R = r * (1 + ETA / 2)
    if not scene.domain.contains_closed_disc(z0, outer):
        raise ValueError("closed disc of radius r(1+eta) must lie inside the domain")
    m = scene.measure
    for p, _ in m.atoms:
        if abs(abs(p - z0) - R) <= 1e-12 * R:
            raise ValueError("an atom lies on the localization circle")
    m_in = restrict_to_disc(m, z0, outer)
    t = (np.arange(n_segments) + 0.5) * (TWO_PI / n_segments)
    nu = np.exp(1j * t)
    zc = z0 + R * nu
    grad_eff = scene.harmonic.gradient(zc) + grad_potential(zc, m) - grad_potential(zc, m_in)
    flux = (grad_eff * np.conj(nu)).real * R * (TWO_PI / n_segments)
    weights = -2.0 * flux
    psi = tuple((complex(p), float(w)) for p, w in zip(zc, weights))
    tilde = m_in + SignedMeasure(atoms=psi)
    k = float(potential_eval(z0, m) + scene.harmonic(z0) - potential_eval(z0, m_in))
    # residual on a sample grid of the open disc
    xs = np.linspace(-r, r, n_sample)
    zs = z0 + (xs[None, :] + 1j * xs[:, None]).ravel()
    zs = zs[np.abs(zs - z0) < r]
    for p, _ in m_in.atoms:
        zs = zs[np.abs(zs - p) > 1e-9 * r]
    lhs = potential_eval(zs, m) + scene.harmonic(zs)
    rhs = potential_eval(zs, tilde) + k
    diff = np.abs(lhs - rhs)
    diff = diff[np.isfinite(diff)]
    residual = float(diff.max()) if diff.size else 0.0
    if residual > tol:
        warnings.warn(f"localization residual {residual:.3g} exceeds tolerance {tol:.3g}", QuadratureWarning)
    return LocalizeResult(tilde, k, residual, psi)
