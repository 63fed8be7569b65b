"""Left and right turns of broken lines, Gauss-Bonnet audits and angles.

For a broken line ``K`` from ``z1`` to ``z2`` in a scene ``(omega, h)``::

    kappa_l(K) = kappa(K) - (1/2pi) int phi_r(K, .) d omega + h*(z1) - h*(z2)
    kappa_r(K) = -kappa(K) + (1/2pi) int phi_l(K, .) d omega - h*(z1) + h*(z2)

Atoms contribute through the angular function directly (one-sided limits
when the atom sits on ``K``). For the diffuse part of ``omega`` the plane
integral is turned into a line integral: the angular function is
``Im int_K dz / (z - zeta)``, so by Fubini

    int phi d omega = Im int_K Phi(z) dz,   Phi = 2 pi conj(grad p(omega)),

the Cauchy transform of the density, which is bounded and available in
closed form. This side-steps the jump of ``phi`` across ``K``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._kernels import gauss_legendre
from .curves import (
    Polyline,
    angular_increments,
    distance_to_polyline,
    left_right_angles,
    rotation,
)
from .measure import GridDensity, SignedMeasure, jordan_parts
from .potential import MetricScene, conjugate_diff, grad_potential

__all__ = [
    "left_turn",
    "right_turn",
    "turns",
    "enclosed_mass",
    "winding_number",
    "gauss_bonnet_defect",
    "subharmonic_angle",
    "split_defect",
    "comparison_angle",
    "ComparisonResult",
    "comparison_excess",
]

TWO_PI = 2 * math.pi
_GL_N = 16


# --------------------------------------------------------------------------
# angular integrals


def _atom_angles(p: Polyline, m: SignedMeasure, tol: float):
    """``(w, phi_l, phi_r)`` for each atom of ``m``."""
    out = []
    ends = (p.start, p.end) if not p.closed else ()
    for z, w in m.atoms:
        for e in ends:
            if abs(z - e) <= tol * max(1.0, abs(e)):
                raise ValueError(f"atom at an extremity of the polyline ({z})")
        phl, phr = left_right_angles(p, z)
        out.append((w, phl, phr))
    return out


def _edge_cuts(a: complex, b: complex, m: SignedMeasure):
    """Parameters in ``(0, 1)`` where the density gradient is not smooth along ``a -> b``."""
    d = b - a
    cuts = []
    for c, r, _ in m.disc_densities + m.circle_densities:
        # |a + t d - c| = r
        f = a - c
        A = abs(d) ** 2
        B = 2 * (np.conj(d) * f).real
        C = abs(f) ** 2 - r * r
        disc = B * B - 4 * A * C
        if disc > 0:
            s = math.sqrt(disc)
            cuts.extend([(-B - s) / (2 * A), (-B + s) / (2 * A)])
    if m.grid is not None:
        g = m.grid
        x0, y0, x1, y1 = g.extent()
        ny, nx = g.shape
        if d.real != 0:
            xs = x0 + g.cell * np.arange(nx + 1)
            cuts.extend(((xs - a.real) / d.real).tolist())
        if d.imag != 0:
            ys = y0 + g.cell * np.arange(ny + 1)
            cuts.extend(((ys - a.imag) / d.imag).tolist())
    cuts = sorted(t for t in cuts if 0.0 < t < 1.0)
    return np.array([0.0] + cuts + [1.0])


def _density_angular_integral(p: Polyline, m: SignedMeasure) -> float:
    """``int phi(K, zeta) d omega(zeta)`` over the non-atomic part of ``m``."""
    dens = SignedMeasure((), m.disc_densities, m.circle_densities, m.grid)
    if dens.is_empty():
        return 0.0
    x, w = gauss_legendre(_GL_N)
    a_arr, b_arr = p.edges()
    ts, ws, zs = [], [], []
    for a, b in zip(a_arr, b_arr):
        a, b = complex(a), complex(b)
        cuts = _edge_cuts(a, b, dens)
        # a few extra splits keep the smooth pieces short
        lo, hi = cuts[:-1], cuts[1:]
        n_sub = 4
        fr = np.linspace(0.0, 1.0, n_sub + 1)
        plo = (lo[:, None] + (hi - lo)[:, None] * fr[None, :-1]).ravel()
        phi = (lo[:, None] + (hi - lo)[:, None] * fr[None, 1:]).ravel()
        t = (plo[:, None] + (phi - plo)[:, None] * x[None, :]).ravel()
        ww = ((phi - plo)[:, None] * w[None, :]).ravel()
        zs.append(a + t * (b - a))
        ws.append(ww * (b - a))
    z = np.concatenate(zs)
    dz = np.concatenate(ws)
    G = grad_potential(z, dens, atoms=False)
    return float(TWO_PI * np.sum(np.conj(G) * dz).imag)


def _turn_parts(scene: MetricScene, p: Polyline, tol: float):
    scene.require_base("turn computations")
    m = scene.measure
    atoms = _atom_angles(p, m, tol)
    atom_l = math.fsum(w * phl for w, phl, _ in atoms)
    atom_r = math.fsum(w * phr for w, _, phr in atoms)
    dens = _density_angular_integral(p, m)
    conj = 0.0 if p.closed else conjugate_diff(scene.harmonic, p.start, p.end)
    return rotation(p), atom_l, atom_r, dens, conj


def left_turn(scene: MetricScene, p: Polyline, tol: float = 1e-12) -> float:
    """``kappa_l(K)``. Atoms on the arc use the right limit of the angular function."""
    kap, _, atom_r, dens, conj = _turn_parts(scene, p, tol)
    return kap - (atom_r + dens) / TWO_PI + conj


def right_turn(scene: MetricScene, p: Polyline, tol: float = 1e-12) -> float:
    kap, atom_l, _, dens, conj = _turn_parts(scene, p, tol)
    return -kap + (atom_l + dens) / TWO_PI - conj


def turns(scene: MetricScene, p: Polyline, tol: float = 1e-12):
    """Both turns from a single pass: ``(kappa_l, kappa_r)``."""
    kap, atom_l, atom_r, dens, conj = _turn_parts(scene, p, tol)
    return kap - (atom_r + dens) / TWO_PI + conj, -kap + (atom_l + dens) / TWO_PI - conj


# --------------------------------------------------------------------------
# enclosed mass


def winding_number(p: Polyline, z) -> int:
    """Winding number of a closed polyline around a point off it."""
    if not p.closed:
        raise ValueError("winding number needs a closed polyline")
    return int(round(float(np.sum(angular_increments(p, complex(z)))) / TWO_PI))


def _disc_polygon_area(verts: np.ndarray, c: complex, R: float) -> float:
    """Winding-weighted area of the intersection of a closed polygon with a disc."""
    v = verts - c
    total = 0.0
    for a, b in zip(v, np.roll(v, -1)):
        a, b = complex(a), complex(b)
        d = b - a
        A = abs(d) ** 2
        B = 2 * (np.conj(d) * a).real
        C = abs(a) ** 2 - R * R
        disc = B * B - 4 * A * C
        ts = [0.0, 1.0]
        if disc > 0:
            s = math.sqrt(disc)
            ts.extend(t for t in ((-B - s) / (2 * A), (-B + s) / (2 * A)) if 0.0 < t < 1.0)
        ts.sort()
        for t0, t1 in zip(ts[:-1], ts[1:]):
            p0, p1 = a + t0 * d, a + t1 * d
            mid = a + 0.5 * (t0 + t1) * d
            if abs(mid) <= R:
                total += 0.5 * (np.conj(p0) * p1).imag
            else:
                total += 0.5 * R * R * float(np.angle(p1 / p0)) if p0 != 0 and p1 != 0 else 0.0
    return total


def _circle_polygon_fraction(p: Polyline, c: complex, R: float) -> float:
    """Winding-weighted fraction of the circle ``C_R(c)`` enclosed by ``p``."""
    a_arr, b_arr = p.edges()
    angles = []
    for a, b in zip(a_arr, b_arr):
        a, b = complex(a) - c, complex(b) - c
        d = b - a
        A = abs(d) ** 2
        B = 2 * (np.conj(d) * a).real
        C = abs(a) ** 2 - R * R
        disc = B * B - 4 * A * C
        if disc > 0:
            s = math.sqrt(disc)
            for t in ((-B - s) / (2 * A), (-B + s) / (2 * A)):
                if 0.0 <= t <= 1.0:
                    angles.append(math.atan2((a + t * d).imag, (a + t * d).real) % TWO_PI)
    angles = sorted(angles)
    if not angles:
        return float(winding_number(p, c + R))
    angles.append(angles[0] + TWO_PI)
    frac = 0.0
    for t0, t1 in zip(angles[:-1], angles[1:]):
        if t1 - t0 <= 0:
            continue
        mid = c + R * complex(math.cos(0.5 * (t0 + t1)), math.sin(0.5 * (t0 + t1)))
        frac += winding_number(p, mid) * (t1 - t0) / TWO_PI
    return frac


def _clip_halfplane(poly: np.ndarray, inside: Callable, cut: Callable) -> np.ndarray:
    if poly.size == 0:
        return poly
    nxt = np.roll(poly, -1)
    ic, inn = inside(poly), inside(nxt)
    cross = ic != inn
    inter = np.where(cross, cut(poly, nxt), 0)
    pts = np.stack([poly, inter], axis=1)
    keep = np.stack([ic, cross], axis=1)
    return pts[keep]


def _shoelace(poly: np.ndarray) -> float:
    if poly.size < 3:
        return 0.0
    return 0.5 * float(np.sum((np.conj(poly) * np.roll(poly, -1)).imag))


def _grid_polygon_mass(p: Polyline, g: GridDensity) -> float:
    verts = p.vertices
    h = g.cell
    cen = g.centers()
    ny, nx = g.shape
    x0, y0 = g.origin.real, g.origin.imag
    # cells touched by the boundary get clipped, the others follow their centre
    a, b = p.edges()
    touched = np.zeros((ny, nx), dtype=bool)
    for za, zb in zip(a, b):
        n = int(math.ceil(abs(zb - za) / (0.25 * h))) + 1
        s = za + np.linspace(0.0, 1.0, n + 1) * (zb - za)
        ix = np.floor((s.real - x0) / h).astype(int)
        iy = np.floor((s.imag - y0) / h).astype(int)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                jx, jy = ix + dx, iy + dy
                ok = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
                touched[jy[ok], jx[ok]] = True
    wind = np.zeros((ny, nx))
    free = ~touched & (g.masses != 0)
    if np.any(free):
        zc = cen[free]
        wind[free] = np.rint(np.sum(np.angle((b[None, :] - zc[:, None]) / (a[None, :] - zc[:, None])), axis=1) / TWO_PI)
    total = float(np.sum(g.masses * wind))
    for iy, ix in np.argwhere(touched & (g.masses != 0)):
        cx0, cy0 = x0 + ix * h, y0 + iy * h
        cx1, cy1 = cx0 + h, cy0 + h
        poly = verts.copy()
        for inside, cut in (
            (lambda q: q.real >= cx0, lambda q, r: q + (cx0 - q.real) / (r.real - q.real) * (r - q)),
            (lambda q: q.real <= cx1, lambda q, r: q + (cx1 - q.real) / (r.real - q.real) * (r - q)),
            (lambda q: q.imag >= cy0, lambda q, r: q + (cy0 - q.imag) / (r.imag - q.imag) * (r - q)),
            (lambda q: q.imag <= cy1, lambda q, r: q + (cy1 - q.imag) / (r.imag - q.imag) * (r - q)),
        ):
            with np.errstate(divide="ignore", invalid="ignore"):
                poly = _clip_halfplane(poly, inside, cut)
        total += g.masses[iy, ix] * _shoelace(poly) / (h * h)
    return total


def enclosed_mass(m: SignedMeasure, p: Polyline, tol: float = 1e-12) -> float:
    """``omega(D)`` for the open region ``D`` bounded by a closed polyline.

    Points are counted with their winding number, so a positively oriented
    simple polygon gives the mass of its interior. Atoms on ``p`` raise.
    """
    if not p.closed:
        raise ValueError("enclosed mass needs a closed polyline")
    total = 0.0
    scale = max(1.0, float(np.max(np.abs(p.vertices))))
    for z, w in m.atoms:
        if distance_to_polyline(p, z) <= tol * scale:
            raise ValueError(f"atom on the polygon boundary ({z})")
        total += w * winding_number(p, z)
    for c, r, mass in m.disc_densities:
        total += mass * _disc_polygon_area(p.vertices, c, r) / (math.pi * r * r)
    for c, r, mass in m.circle_densities:
        total += mass * _circle_polygon_fraction(p, c, r)
    if m.grid is not None:
        total += _grid_polygon_mass(p, m.grid)
    return float(total)


def gauss_bonnet_defect(scene: MetricScene, p: Polyline, tol: float = 1e-12) -> float:
    """``kappa_l(K) + omega(D) - 2 pi`` for a positively oriented simple closed polyline."""
    if not p.closed:
        raise ValueError("Gauss-Bonnet needs a closed polyline")
    scene.require_base("gauss_bonnet_defect")
    mass = enclosed_mass(scene.measure, p, tol)
    return left_turn(scene, p, tol) + mass - TWO_PI


# --------------------------------------------------------------------------
# angles


def _euclid_left_angle(p1: Polyline, p2: Polyline) -> float:
    d1 = p1.vertices[1] - p1.vertices[0]
    d2 = p2.vertices[1] - p2.vertices[0]
    th = float(np.angle(d2 / d1)) % TWO_PI
    if th == 0.0:
        raise ValueError("the two arcs leave in the same direction")
    return th


def subharmonic_angle(scene: MetricScene, p1: Polyline, p2: Polyline, tol: float = 1e-12) -> float:
    """Angle at the common start point ``z`` swept counterclockwise from ``p1`` to ``p2``.

    The Euclidean sector angle is scaled by ``1 - omega({z}) / 2pi``.
    """
    z = p1.start
    if abs(p2.start - z) > tol * max(1.0, abs(z)):
        raise ValueError("the two arcs must start at the same point")
    w = scene.point_mass(z, tol=tol * max(1.0, abs(z)))
    if max(w, 0.0) >= TWO_PI:
        raise ValueError("angle undefined at a point of mass >= 2 pi")
    return (1 - w / TWO_PI) * _euclid_left_angle(p1, p2)


def split_defect(scene: MetricScene, p: Polyline, i: int) -> float:
    """Residual of ``kappa_l(K) = kappa_l(K1) + kappa_l(K2) + pi - theta_l`` at vertex ``i``."""
    k1, k2 = p.split(i)
    theta = subharmonic_angle(scene, k2, k1.reversed())
    return left_turn(scene, p) - (left_turn(scene, k1) + left_turn(scene, k2) + math.pi - theta)


# --------------------------------------------------------------------------
# comparison angles


def comparison_angle(a: float, b: float, c: float) -> float:
    """Euclidean angle opposite to side ``c`` in the triangle with sides ``a, b, c``."""
    if not (a > 0 and b > 0):
        raise ValueError("degenerate comparison triangle")
    cosv = (a * a + b * b - c * c) / (2 * a * b)
    return math.acos(min(1.0, max(-1.0, cosv)))


@dataclass
class ComparisonResult:
    alpha_bar_estimate: float
    alpha0: float
    excess_bound_holds: bool
    sequence: list = field(default_factory=list)
    t_schedule: list = field(default_factory=list)
    omega_plus: float = 0.0
    sides: tuple = ()


def _point_at_length(metric_len: Callable, verts: np.ndarray, target: float) -> complex:
    """Point of the broken line at metric length ``target`` from its start."""
    acc = 0.0
    for a, b in zip(verts[:-1], verts[1:]):
        seg = metric_len(a, b)
        if acc + seg >= target:
            lo, hi = 0.0, 1.0
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                if acc + metric_len(a, a + mid * (b - a)) < target:
                    lo = mid
                else:
                    hi = mid
            return complex(a + 0.5 * (lo + hi) * (b - a))
        acc += seg
    return complex(verts[-1])


def comparison_excess(
    scene: MetricScene,
    x,
    y1,
    y2,
    t_schedule=(0.2, 0.1, 0.05, 0.025),
    dist: Optional[Callable] = None,
    geodesic: Optional[Callable] = None,
    tol: float = 0.02,
) -> ComparisonResult:
    """Upper-angle estimate at ``x`` against the comparison angle ``alpha0``.

    ``dist(z, w)`` and ``geodesic(z, w)`` (plane points of a shortest arc)
    default to the grid solver. Points ``x_i`` at fraction ``t`` of each side
    feed comparison angles; the sequence is Richardson-extrapolated in ``t``
    and the bound ``alpha_bar - alpha0 <= omega+(T) + tol`` is checked, with
    ``T`` the open region bounded by the three arcs.
    """
    from .metric import distance, segment_length

    x, y1, y2 = complex(x), complex(y1), complex(y2)
    if dist is None or geodesic is None:
        def dist(z, w):
            return distance(scene, z, w).value

        def geodesic(z, w):
            return distance(scene, z, w).witness.vertices

    a, b, c = dist(x, y1), dist(x, y2), dist(y1, y2)
    if not all(math.isfinite(v) and v > 0 for v in (a, b, c)):
        raise ValueError("comparison needs three finite positive distances")
    if max(a, b, c) >= 0.5 * (a + b + c) * (1 - 1e-9):
        raise ValueError("degenerate (collinear) triangle")
    alpha0 = comparison_angle(a, b, c)
    g1 = np.asarray(geodesic(x, y1), dtype=complex)
    g2 = np.asarray(geodesic(x, y2), dtype=complex)
    g3 = np.asarray(geodesic(y1, y2), dtype=complex)

    def seg_len(z, w):
        return segment_length(scene, z, w)

    seq = []
    ts = list(t_schedule)
    for t in ts:
        x1 = _point_at_length(seg_len, g1, t * a)
        x2 = _point_at_length(seg_len, g2, t * b)
        seq.append(comparison_angle(dist(x, x1), dist(x, x2), dist(x1, x2)))
    if len(seq) >= 2:
        r = ts[-1] / ts[-2]
        est = (seq[-1] - r * seq[-2]) / (1 - r)
    else:
        est = seq[-1]
    loop = np.concatenate([g1, g3[1:], g2[::-1][1:-1]])
    tri = Polyline(loop, closed=True)
    if _shoelace(tri.vertices) < 0:
        tri = tri.reversed()
    pos, _ = jordan_parts(scene.measure)
    try:
        omega_plus = enclosed_mass(pos, tri)
    except ValueError:
        omega_plus = math.nan
    holds = max(est, seq[-1]) - alpha0 <= omega_plus + tol
    return ComparisonResult(est, alpha0, bool(holds), seq, ts, omega_plus, (a, b, c))
