"""Signed measures with compact support, harmonic polynomials and domains.

A :class:`SignedMeasure` is a finite sum of

* atoms ``w * delta_zeta`` (weights in radians of curvature),
* uniform densities on closed discs,
* uniform (arc-length) densities on circles,
* an optional piecewise-constant grid density (produced by mollification).

Points of the plane are Python/numpy complex numbers throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Domain",
    "HarmonicPoly",
    "GridDensity",
    "SignedMeasure",
    "jordan_parts",
    "total_variation",
    "mass_in_disc",
    "restrict_to_disc",
    "disc_disc_overlap",
    "circle_fraction_in_disc",
    "rect_disc_overlap",
]


@dataclass(frozen=True)
class Domain:
    """Open disc ``|z - center| < radius``."""

    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise ValueError("domain radius must be a positive finite number")

    def contains(self, z, margin: float = 0.0):
        return np.abs(np.asarray(z) - self.center) < self.radius - margin

    def contains_closed_disc(self, center: complex, radius: float) -> bool:
        return abs(center - self.center) + radius < self.radius


@dataclass(frozen=True)
class HarmonicPoly:
    """``h(z) = Re P(z)`` with ``P(z) = sum_k coeffs[k] z**k``.

    The harmonic conjugate is ``h*(z) = Im P(z)``.
    """

    coeffs: tuple = ()

    def __post_init__(self):
        c = tuple(complex(a) for a in self.coeffs)
        while c and c[-1] == 0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def analytic(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for a in reversed(self.coeffs):
            out = out * z + a
        return out

    def derivative(self, z):
        """Complex derivative ``P'(z)``; ``dh/dx = Re P'``, ``dh/dy = -Im P'``."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        n = len(self.coeffs)
        for k in range(n - 1, 0, -1):
            out = out * z + k * self.coeffs[k]
        return out

    def __call__(self, z):
        return self.analytic(z).real

    def conjugate(self, z):
        return self.analytic(z).imag

    def gradient(self, z):
        """Gradient of ``h`` packed as the complex number ``h_x + i h_y``."""
        return np.conj(self.derivative(z))


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Piecewise-constant density on square cells.

    ``masses[iy, ix]`` is the mass of the cell whose lower-left corner is
    ``origin + ix*cell + 1j*iy*cell``.
    """

    origin: complex
    cell: float
    masses: np.ndarray

    def __post_init__(self):
        m = np.array(self.masses, dtype=float)
        if m.ndim != 2:
            raise ValueError("grid masses must be a 2D array")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "origin", complex(self.origin))
        object.__setattr__(self, "cell", float(self.cell))
        if not self.cell > 0:
            raise ValueError("grid cell size must be positive")

    @property
    def shape(self):
        return self.masses.shape

    def centers(self) -> np.ndarray:
        ny, nx = self.masses.shape
        ix = np.arange(nx) + 0.5
        iy = np.arange(ny) + 0.5
        return self.origin + self.cell * (ix[None, :] + 1j * iy[:, None])

    def extent(self):
        ny, nx = self.masses.shape
        x0, y0 = self.origin.real, self.origin.imag
        return x0, y0, x0 + nx * self.cell, y0 + ny * self.cell

    def total(self) -> float:
        return float(self.masses.sum())

    def __eq__(self, other):
        if not isinstance(other, GridDensity):
            return NotImplemented
        return (
            self.origin == other.origin
            and self.cell == other.cell
            and np.array_equal(self.masses, other.masses)
        )

    __hash__ = None


def _merge_atoms(atoms) -> tuple:
    merged: dict = {}
    for pos, w in atoms:
        pos = complex(pos)
        w = float(w)
        if not (math.isfinite(pos.real) and math.isfinite(pos.imag) and math.isfinite(w)):
            raise ValueError("atoms must have finite positions and weights")
        merged[pos] = merged.get(pos, 0.0) + w
    return tuple((p, w) for p, w in merged.items() if w != 0.0)


def _clean_components(comps, kind: str) -> tuple:
    out = []
    for c, r, m in comps:
        c, r, m = complex(c), float(r), float(m)
        if not r > 0:
            raise ValueError(f"{kind} radius must be positive")
        if m != 0.0:
            out.append((c, r, m))
    return tuple(out)


@dataclass(frozen=True)
class SignedMeasure:
    """Finite signed measure with compact support.

    Atoms at bitwise-identical positions are merged on construction and
    atoms whose merged weight is zero are dropped. Components with zero
    mass are dropped as well.
    """

    atoms: tuple = ()
    disc_densities: tuple = ()
    circle_densities: tuple = ()
    grid: Optional[GridDensity] = None

    def __post_init__(self):
        object.__setattr__(self, "atoms", _merge_atoms(self.atoms))
        object.__setattr__(self, "disc_densities", _clean_components(self.disc_densities, "disc"))
        object.__setattr__(self, "circle_densities", _clean_components(self.circle_densities, "circle"))
        if self.grid is not None and not np.any(self.grid.masses):
            object.__setattr__(self, "grid", None)

    @classmethod
    def atom(cls, pos, weight) -> "SignedMeasure":
        return cls(atoms=((pos, weight),))

    def is_empty(self) -> bool:
        return not (self.atoms or self.disc_densities or self.circle_densities or self.grid is not None)

    def total_mass(self) -> float:
        total = sum(w for _, w in self.atoms)
        total += sum(m for _, _, m in self.disc_densities)
        total += sum(m for _, _, m in self.circle_densities)
        if self.grid is not None:
            total += self.grid.total()
        return float(total)

    def atom_mass(self, z, tol: float = 0.0) -> float:
        """``omega({z})``: only atoms carry point masses."""
        return float(sum(w for p, w in self.atoms if abs(p - z) <= tol))

    def bounding_disc(self):
        """A closed disc ``(center, radius)`` containing the support."""
        pts, rads = [], []
        for p, _ in self.atoms:
            pts.append(p)
            rads.append(0.0)
        for c, r, _ in self.disc_densities + self.circle_densities:
            pts.append(c)
            rads.append(r)
        if self.grid is not None:
            x0, y0, x1, y1 = self.grid.extent()
            pts.append(complex((x0 + x1) / 2, (y0 + y1) / 2))
            rads.append(0.5 * math.hypot(x1 - x0, y1 - y0))
        if not pts:
            return 0j, 0.0
        pts_a = np.array(pts)
        lo = complex(min(p.real - r for p, r in zip(pts, rads)), min(p.imag - r for p, r in zip(pts, rads)))
        hi = complex(max(p.real + r for p, r in zip(pts, rads)), max(p.imag + r for p, r in zip(pts, rads)))
        c = (lo + hi) / 2
        radius = float(np.max(np.abs(pts_a - c) + np.array(rads)))
        return c, radius

    def support_inside(self, domain: Domain) -> bool:
        """True when every component lies in the closed disc of ``domain``.

        The domain is open but a component touching its boundary still has
        compact support; only strict escape is rejected.
        """
        tol = 1e-12 * domain.radius
        for p, _ in self.atoms:
            if abs(p - domain.center) > domain.radius + tol:
                return False
        for c, r, _ in self.disc_densities + self.circle_densities:
            if abs(c - domain.center) + r > domain.radius + tol:
                return False
        if self.grid is not None:
            x0, y0, x1, y1 = self.grid.extent()
            for z in (complex(x0, y0), complex(x1, y0), complex(x0, y1), complex(x1, y1)):
                if abs(z - domain.center) > domain.radius + tol:
                    return False
        return True

    def negated(self) -> "SignedMeasure":
        return SignedMeasure(
            atoms=tuple((p, -w) for p, w in self.atoms),
            disc_densities=tuple((c, r, -m) for c, r, m in self.disc_densities),
            circle_densities=tuple((c, r, -m) for c, r, m in self.circle_densities),
            grid=None if self.grid is None else GridDensity(self.grid.origin, self.grid.cell, -self.grid.masses),
        )

    def __add__(self, other: "SignedMeasure") -> "SignedMeasure":
        if not isinstance(other, SignedMeasure):
            return NotImplemented
        if self.grid is not None and other.grid is not None:
            raise ValueError("cannot add two measures that both carry a grid density")
        return SignedMeasure(
            atoms=self.atoms + other.atoms,
            disc_densities=self.disc_densities + other.disc_densities,
            circle_densities=self.circle_densities + other.circle_densities,
            grid=self.grid if self.grid is not None else other.grid,
        )

    def __sub__(self, other: "SignedMeasure") -> "SignedMeasure":
        return self + other.negated()

    def without_grid(self) -> "SignedMeasure":
        return SignedMeasure(self.atoms, self.disc_densities, self.circle_densities, None)


def jordan_parts(m: SignedMeasure):
    """Split ``m`` into its positive and negative variations ``(m+, m-)``.

    Both parts are positive measures and ``m = m+ - m-`` component-wise.
    """
    pos_atoms = tuple((p, w) for p, w in m.atoms if w > 0)
    neg_atoms = tuple((p, -w) for p, w in m.atoms if w < 0)
    pos_discs = tuple(d for d in m.disc_densities if d[2] > 0)
    neg_discs = tuple((c, r, -mm) for c, r, mm in m.disc_densities if mm < 0)
    pos_circ = tuple(d for d in m.circle_densities if d[2] > 0)
    neg_circ = tuple((c, r, -mm) for c, r, mm in m.circle_densities if mm < 0)
    pos_grid = neg_grid = None
    if m.grid is not None:
        g = m.grid
        pos_grid = GridDensity(g.origin, g.cell, np.where(g.masses > 0, g.masses, 0.0))
        neg_grid = GridDensity(g.origin, g.cell, np.where(g.masses < 0, -g.masses, 0.0))
    return (
        SignedMeasure(pos_atoms, pos_discs, pos_circ, pos_grid),
        SignedMeasure(neg_atoms, neg_discs, neg_circ, neg_grid),
    )


def total_variation(m: SignedMeasure) -> float:
    """``|m|(C)``."""
    tv = math.fsum(abs(w) for _, w in m.atoms)
    tv += math.fsum(abs(mm) for _, _, mm in m.disc_densities)
    tv += math.fsum(abs(mm) for _, _, mm in m.circle_densities)
    if m.grid is not None:
        tv += float(np.abs(m.grid.masses).sum())
    return tv


# --------------------------------------------------------------------------
# disc intersection geometry


def disc_disc_overlap(c1: complex, r1: float, c2: complex, r2: float) -> float:
    """Area of the intersection of two discs."""
    d = abs(c1 - c2)
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    a1 = math.acos(max(-1.0, min(1.0, (d * d + r1 * r1 - r2 * r2) / (2 * d * r1))))
    a2 = math.acos(max(-1.0, min(1.0, (d * d + r2 * r2 - r1 * r1) / (2 * d * r2))))
    tri = 0.5 * math.sqrt(max(0.0, (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)))
    return r1 * r1 * a1 + r2 * r2 * a2 - tri


def circle_fraction_in_disc(c: complex, r: float, q: complex, R: float) -> float:
    """Fraction of the arc length of ``C_r(c)`` lying in the open disc ``Q_R(q)``."""
    d = abs(c - q)
    if d == 0.0:
        return 1.0 if r < R else 0.0
    # a point at angle t from the direction c->q is inside iff cos t > k
    k = (d * d + r * r - R * R) / (2 * d * r)
    if k >= 1.0:
        return 0.0
    if k <= -1.0:
        return 1.0
    return math.acos(k) / math.pi


def _chord_area(x: float, R: float) -> float:
    """Antiderivative of ``sqrt(R^2 - X^2)`` with ``x`` clipped to ``[-R, R]``."""
    x = max(-R, min(R, x))
    return 0.5 * (x * math.sqrt(max(0.0, R * R - x * x)) + R * R * math.asin(x / R))


def rect_disc_overlap(x0: float, y0: float, x1: float, y1: float, c: complex, R: float) -> float:
    """Area of ``[x0,x1] x [y0,y1]`` intersected with the disc ``Q_R(c)``.

    Integrates the clipped vertical chord length piecewise in closed form.
    """
    x0, x1 = x0 - c.real, x1 - c.real
    y0, y1 = y0 - c.imag, y1 - c.imag
    a, b = max(x0, -R), min(x1, R)
    if a >= b or y0 >= R or y1 <= -R:
        return 0.0
    # breakpoints where the chord [-s, s] crosses y0 or y1
    cuts = {a, b}
    for y in (y0, y1):
        if abs(y) < R:
            xc = math.sqrt(R * R - y * y)
            for x in (-xc, xc):
                if a < x < b:
                    cuts.add(x)
    pts = sorted(cuts)
    area = 0.0
    for u, v in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (u + v)
        s = math.sqrt(max(0.0, R * R - mid * mid))
        lo_in = y0 > -s  # lower clip active
        hi_in = y1 < s
        if y0 >= s or y1 <= -s:
            continue
        if lo_in and hi_in:
            area += (y1 - y0) * (v - u)
        elif lo_in:
            area += (_chord_area(v, R) - _chord_area(u, R)) - y0 * (v - u)
        elif hi_in:
            area += y1 * (v - u) + (_chord_area(v, R) - _chord_area(u, R))
        else:
            area += 2.0 * (_chord_area(v, R) - _chord_area(u, R))
    return area


def mass_in_disc(m: SignedMeasure, center, radius: float) -> float:
    """Signed mass of the open disc ``Q_radius(center)``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    center = complex(center)
    total = math.fsum(w for p, w in m.atoms if abs(p - center) < radius)
    for c, r, mm in m.disc_densities:
        total += mm * disc_disc_overlap(c, r, center, radius) / (math.pi * r * r)
    for c, r, mm in m.circle_densities:
        total += mm * circle_fraction_in_disc(c, r, center, radius)
    if m.grid is not None:
        total += _grid_mass_in_disc(m.grid, center, radius)
    return float(total)


def _grid_cell_disc_fractions(g: GridDensity, center: complex, radius: float) -> np.ndarray:
    ny, nx = g.shape
    h = g.cell
    frac = np.zeros((ny, nx))
    cen = g.centers()
    d = np.abs(cen - center)
    half_diag = h / math.sqrt(2.0)
    frac[d + half_diag < radius] = 1.0
    partial = np.argwhere((d + half_diag >= radius) & (d - half_diag < radius))
    for iy, ix in partial:
        x0 = g.origin.real + ix * h
        y0 = g.origin.imag + iy * h
        frac[iy, ix] = rect_disc_overlap(x0, y0, x0 + h, y0 + h, center, radius) / (h * h)
    return frac


def _grid_mass_in_disc(g: GridDensity, center: complex, radius: float) -> float:
    return float((g.masses * _grid_cell_disc_fractions(g, center, radius)).sum())


def restrict_to_disc(m: SignedMeasure, center, radius: float, n_split: int = 64) -> SignedMeasure:
    """The measure equal to ``m`` on the open disc and zero outside.

    Components that straddle the circle are replaced by at most ``n_split``
    atoms placed inside the disc and carrying the exact overlap mass.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    center = complex(center)
    atoms = [(p, w) for p, w in m.atoms if abs(p - center) < radius]
    discs, circles = [], []
    for c, r, mm in m.disc_densities:
        d = abs(c - center)
        if d + r < radius:
            discs.append((c, r, mm))
        elif d < r + radius:
            atoms.extend(_atomize_disc_overlap(c, r, mm, center, radius, n_split))
    for c, r, mm in m.circle_densities:
        d = abs(c - center)
        if d + r < radius:
            circles.append((c, r, mm))
        elif d < r + radius:
            atoms.extend(_atomize_circle_overlap(c, r, mm, center, radius, n_split))
    grid = None
    if m.grid is not None:
        g = m.grid
        frac = _grid_cell_disc_fractions(g, center, radius)
        full = np.where(frac == 1.0, g.masses, 0.0)
        grid = GridDensity(g.origin, g.cell, full)
        partial = np.argwhere((frac > 0) & (frac < 1))
        for iy, ix in partial:
            mass = g.masses[iy, ix] * frac[iy, ix]
            if mass == 0:
                continue
            x0 = g.origin.real + ix * g.cell
            y0 = g.origin.imag + iy * g.cell
            atoms.append((_inside_centroid_rect(x0, y0, g.cell, center, radius), mass))
    return SignedMeasure(tuple(atoms), tuple(discs), tuple(circles), grid)


def _atomize_circle_overlap(c, r, mass, q, R, n_split):
    frac = circle_fraction_in_disc(c, r, q, R)
    if frac == 0.0:
        return []
    half = frac * math.pi
    mid = math.atan2((q - c).imag, (q - c).real)
    k = max(1, int(n_split))
    t = mid - half + (np.arange(k) + 0.5) * (2 * half / k)
    pts = c + r * np.exp(1j * t)
    return [(complex(p), mass * frac / k) for p in pts]


def _atomize_disc_overlap(c, r, mass, q, R, n_split):
    overlap = disc_disc_overlap(c, r, q, R)
    if overlap == 0.0:
        return []
    # sample the lens on a fine grid and bin into <= n_split clusters
    n = 64
    xs = c.real - r + (np.arange(n) + 0.5) * (2 * r / n)
    ys = c.imag - r + (np.arange(n) + 0.5) * (2 * r / n)
    z = xs[None, :] + 1j * ys[:, None]
    inside = (np.abs(z - c) < r) & (np.abs(z - q) < R)
    pts = z[inside]
    if pts.size == 0:
        # lens thinner than the sampling grid
        d = q - c
        return [(c + d / abs(d) * r, mass * overlap / (math.pi * r * r))]
    k = max(1, min(int(n_split), pts.size))
    side = max(1, int(math.floor(math.sqrt(k))))
    span_x = np.ptp(pts.real) or 1.0
    span_y = np.ptp(pts.imag) or 1.0
    bx = np.minimum(((pts.real - pts.real.min()) / span_x * side).astype(int), side - 1)
    by = np.minimum(((pts.imag - pts.imag.min()) / span_y * side).astype(int), side - 1)
    key = by * side + bx
    total = mass * overlap / (math.pi * r * r)
    out = []
    for kk in np.unique(key):
        sel = pts[key == kk]
        out.append((complex(sel.mean()), total * sel.size / pts.size))
    return out


def _inside_centroid_rect(x0, y0, h, q, R):
    n = 8
    xs = x0 + (np.arange(n) + 0.5) * h / n
    ys = y0 + (np.arange(n) + 0.5) * h / n
    z = xs[None, :] + 1j * ys[:, None]
    sel = z[np.abs(z - q) < R]
    if sel.size == 0:
        cen = complex(x0 + h / 2, y0 + h / 2)
        d = cen - q
        return q + d / abs(d) * R * (1 - 1e-12) if d != 0 else q
    return complex(sel.mean())


def atom_positions(m: SignedMeasure) -> np.ndarray:
    return np.array([p for p, _ in m.atoms], dtype=complex)


def atom_weights(m: SignedMeasure) -> np.ndarray:
    return np.array([w for _, w in m.atoms], dtype=float)


def measure_from_points(points: Sequence[complex], weights: Sequence[float]) -> SignedMeasure:
    return SignedMeasure(atoms=tuple(zip(points, weights)))
