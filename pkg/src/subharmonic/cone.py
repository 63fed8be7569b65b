"""Flat cones: exact distances by unfolding, circle lengths and sector angles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import Domain, SignedMeasure
from .potential import MetricScene

__all__ = [
    "ConeSpec",
    "plane_to_cone",
    "cone_distance",
    "cone_geodesic",
    "cone_circle_length",
    "sector_angle",
    "curvature_factor",
    "cone_scene",
]

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class ConeSpec:
    """Cone ``|z - vertex|^(2 beta) |dz|^2`` with curvature ``omega0`` at the vertex."""

    vertex: complex = 0j
    omega0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "vertex", complex(self.vertex))
        if not math.isfinite(self.omega0):
            raise ValueError("omega0 must be finite")
        if not self.omega0 < TWO_PI:
            raise ValueError("a flat cone needs omega0 < 2 pi (positive cone angle)")

    @property
    def beta(self) -> float:
        return -self.omega0 / TWO_PI

    @property
    def alpha(self) -> float:
        return TWO_PI - self.omega0


def plane_to_cone(c: ConeSpec, z):
    """Intrinsic polar coordinates ``(rho, theta)`` of the plane point ``z``.

    ``rho = |z - v|^(1+beta) / (1+beta)`` and ``theta = (1+beta) arg(z - v)``
    reduced to ``[0, alpha)``. The vertex maps to ``(0, nan)``.
    """
    z = np.asarray(z, dtype=complex)
    w = z - c.vertex
    b1 = 1.0 + c.beta
    rho = np.abs(w) ** b1 / b1
    arg = np.mod(np.angle(w), TWO_PI)
    theta = np.mod(b1 * arg, c.alpha)
    theta = np.where(w == 0, np.nan, theta)
    if rho.ndim == 0:
        return float(rho), float(theta)
    return rho, theta


def _unfold_gap(c: ConeSpec, t1, t2):
    d = np.abs(t1 - t2)
    d = np.mod(d, c.alpha)
    return np.minimum(d, c.alpha - d)


def cone_distance(c: ConeSpec, z1, z2):
    """Exact cone distance: law of cosines in the unfolded sector, or through the vertex."""
    r1, t1 = plane_to_cone(c, z1)
    r2, t2 = plane_to_cone(c, z2)
    r1, r2 = np.asarray(r1), np.asarray(r2)
    gap = _unfold_gap(c, np.nan_to_num(t1), np.nan_to_num(t2))
    direct = np.sqrt(np.maximum(r1 ** 2 + r2 ** 2 - 2 * r1 * r2 * np.cos(np.minimum(gap, math.pi)), 0.0))
    out = np.where(gap <= math.pi, direct, r1 + r2)
    if out.ndim == 0:
        return float(out)
    return out


def cone_geodesic(c: ConeSpec, z1, z2, n: int = 64):
    """Plane points of the shortest arc from ``z1`` to ``z2`` (``n`` edges)."""
    z1, z2 = complex(z1), complex(z2)
    r1, t1 = plane_to_cone(c, z1)
    r2, t2 = plane_to_cone(c, z2)
    b1 = 1.0 + c.beta
    if r1 == 0 or r2 == 0 or _unfold_gap(c, t1, t2) > math.pi:
        s = np.linspace(-1.0, 1.0, n + 1)
        rho = np.where(s < 0, -s * r1, s * r2)
        ang = np.where(s < 0, np.angle(z1 - c.vertex), np.angle(z2 - c.vertex))
        return c.vertex + (rho * b1) ** (1 / b1) * np.exp(1j * ang)
    # lift t2 next to t1 and straighten in the unfolded sector
    d = math.remainder(t2 - t1, c.alpha)
    p1 = r1
    p2 = r2 * np.exp(1j * d)
    seg = p1 + np.linspace(0.0, 1.0, n + 1) * (p2 - p1)
    base = np.angle(z1 - c.vertex)
    return c.vertex + (np.abs(seg) * b1) ** (1 / b1) * np.exp(1j * (base + np.angle(seg) / b1))


def cone_circle_length(c: ConeSpec, r_plane: float) -> float:
    """Length of the plane circle ``|z - v| = r``: ``2 pi r^(1+beta)``."""
    if not r_plane > 0:
        raise ValueError("radius must be positive")
    return TWO_PI * r_plane ** (1 + c.beta)


def sector_angle(c: ConeSpec, theta_plane: float) -> float:
    if not 0 < theta_plane <= TWO_PI:
        raise ValueError("plane angle must lie in (0, 2 pi]")
    return theta_plane * (1 - c.omega0 / TWO_PI)


def curvature_factor(kind: str, beta: float, z):
    """Conformal factor of the spherical or hyperbolic cone,
    ``4|z|^(2b) / (1 +- |z|^(2b+2) / (b+1)^2)^2``.
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    q = r ** (2 * beta + 2) / (beta + 1) ** 2
    if kind == "spherical":
        den = 1 + q
    elif kind == "hyperbolic":
        if np.any(q >= 1):
            raise ValueError("hyperbolic factor is defined only where |z|^(2b+2) < (b+1)^2")
        den = 1 - q
    else:
        raise ValueError("kind must be 'spherical' or 'hyperbolic'")
    with np.errstate(divide="ignore"):
        out = 4 * r ** (2 * beta) / den ** 2
    if out.ndim == 0:
        return float(out)
    return out


def cone_scene(c: ConeSpec, radius: float = 2.0) -> MetricScene:
    """Scene whose metric is the cone ``c`` on the disc ``Q_radius(vertex)``."""
    return MetricScene(Domain(c.vertex, radius), SignedMeasure.atom(c.vertex, c.omega0))
