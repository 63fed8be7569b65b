"""Broken lines in the Euclidean plane: length, rotation and angular functions."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Polyline",
    "circle_polygon",
    "euclid_length",
    "vertex_angles",
    "rotation",
    "abs_rotation",
    "running_rotation",
    "angular_function",
    "angular_increments",
    "angular_tv",
    "left_right_angles",
    "alexandrov_bound_check",
    "read_polyline",
    "write_polyline",
    "CurveWarning",
]

LR_EPS = (1e-3, 5e-4, 2.5e-4)


class CurveWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered vertices ``v_0 .. v_n`` (complex); ``closed`` adds the edge ``v_n -> v_0``."""

    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self):
        v = np.array(self.vertices, dtype=complex).ravel()
        if v.size < 2:
            raise ValueError("a polyline needs at least two vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polyline vertices must be finite")
        if self.closed and v[0] == v[-1]:
            v = v[:-1]
        nxt = np.roll(v, -1) if self.closed else v[1:]
        cur = v if self.closed else v[:-1]
        if np.any(nxt == cur):
            raise ValueError("consecutive polyline vertices must be distinct")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return self.vertices.size

    @property
    def start(self) -> complex:
        return complex(self.vertices[0])

    @property
    def end(self) -> complex:
        return complex(self.vertices[0] if self.closed else self.vertices[-1])

    def edges(self):
        """Arrays ``(a, b)`` of edge start and end points."""
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1)
        return v[:-1], v[1:]

    def reversed(self) -> "Polyline":
        return Polyline(self.vertices[::-1], self.closed)

    def split(self, i: int):
        """The two sub-arcs ``v_0..v_i`` and ``v_i..v_n`` of an open polyline."""
        if self.closed:
            raise ValueError("split needs an open polyline")
        if not 0 < i < len(self) - 1:
            raise ValueError("split index must be an interior vertex")
        return Polyline(self.vertices[: i + 1]), Polyline(self.vertices[i:])

    def concat(self, other: "Polyline") -> "Polyline":
        if self.closed or other.closed or self.end != other.start:
            raise ValueError("concatenation needs open polylines sharing an endpoint")
        return Polyline(np.concatenate([self.vertices, other.vertices[1:]]))

    def resample(self, n_edges: int) -> "Polyline":
        """Vertices equally spaced in arc length (open polylines)."""
        a, b = self.edges()
        seg = np.abs(b - a)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        t = np.linspace(0.0, cum[-1], n_edges + 1)
        idx = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, seg.size - 1)
        frac = (t - cum[idx]) / seg[idx]
        pts = a[idx] + frac * (b[idx] - a[idx])
        pts[0], pts[-1] = self.vertices[0], self.end
        keep = np.concatenate([[True], np.diff(pts) != 0])
        return Polyline(pts[keep], self.closed)


def circle_polygon(center=0j, radius: float = 1.0, n: int = 1024, phase: float = 0.0) -> Polyline:
    """Closed regular ``n``-gon inscribed in ``C_radius(center)``, positively oriented."""
    t = phase + np.arange(n) * (2 * math.pi / n)
    return Polyline(complex(center) + radius * np.exp(1j * t), closed=True)


def euclid_length(p: Polyline) -> float:
    a, b = p.edges()
    return float(math.fsum(np.abs(b - a)))


def vertex_angles(p: Polyline) -> np.ndarray:
    """Signed exterior angles, in ``(-pi, pi)``, at the vertices where the direction changes.

    For open polylines these are the interior vertices; for closed ones every
    vertex. A reversal (angle exactly ``pi``) raises ``ValueError``.
    """
    a, b = p.edges()
    d = b - a
    if p.closed:
        prev, nxt = np.roll(d, 1), d
    else:
        prev, nxt = d[:-1], d[1:]
    ang = np.angle(nxt / prev)
    cross = (np.conj(prev) * nxt).imag
    dot = (np.conj(prev) * nxt).real
    if np.any((cross == 0) & (dot < 0)):
        raise ValueError("polyline reverses direction at a vertex (angle pi)")
    return ang


def rotation(p: Polyline) -> float:
    """``kappa(K)``: sum of the signed exterior angles."""
    return float(math.fsum(vertex_angles(p)))


def abs_rotation(p: Polyline) -> float:
    """``|kappa|(K)``: sum of the absolute exterior angles."""
    return float(math.fsum(np.abs(vertex_angles(p))))


def running_rotation(p: Polyline) -> np.ndarray:
    """Rotation of the sub-arcs ``v_0 .. v_k`` for ``k = 0 .. n`` (open polylines)."""
    return np.concatenate([[0.0, 0.0], np.cumsum(vertex_angles(p))])


def _check_off(p: Polyline, zeta, tol: float):
    if distance_to_polyline(p, zeta) <= tol:
        raise ValueError("point lies on the polyline; use left_right_angles")


def distance_to_polyline(p: Polyline, z) -> float:
    a, b = p.edges()
    d = b - a
    t = np.clip(((np.conj(d) * (z - a)).real) / (np.abs(d) ** 2), 0.0, 1.0)
    return float(np.min(np.abs(a + t * d - z)))


def angular_increments(p: Polyline, zeta) -> np.ndarray:
    """Angle swept by each edge as seen from ``zeta`` (each in ``(-pi, pi)``)."""
    a, b = p.edges()
    return np.angle((b - zeta) / (a - zeta))


def angular_function(p: Polyline, zeta, tol: float = 1e-14) -> float:
    """``phi(K, zeta)``: total angle under which ``K`` is seen from ``zeta``."""
    zeta = complex(zeta)
    _check_off(p, zeta, tol * max(1.0, np.max(np.abs(p.vertices))))
    return float(math.fsum(angular_increments(p, zeta)))


def angular_tv(p: Polyline, zeta, tol: float = 1e-14) -> float:
    """Total variation of ``t -> phi(K_t, zeta)`` along the polyline.

    The seen angle is monotone along each straight edge, so the variation is
    the sum of the absolute per-edge increments.
    """
    zeta = complex(zeta)
    _check_off(p, zeta, tol * max(1.0, np.max(np.abs(p.vertices))))
    return float(math.fsum(np.abs(angular_increments(p, zeta))))


def _locate(p: Polyline, zeta, tol):
    """Return ``('edge', i)`` or ``('vertex', i)`` for a point on the polyline."""
    a, b = p.edges()
    d = b - a
    scale = max(1.0, float(np.max(np.abs(p.vertices))))
    dv = np.abs(p.vertices - zeta)
    iv = int(np.argmin(dv))
    if dv[iv] <= tol * scale:
        return "vertex", iv
    t = ((np.conj(d) * (zeta - a)).real) / (np.abs(d) ** 2)
    dist = np.abs(a + np.clip(t, 0, 1) * d - zeta)
    ie = int(np.argmin(dist))
    if dist[ie] <= tol * scale and 0 < t[ie] < 1:
        return "edge", ie
    return None, None


def left_right_angles(p: Polyline, zeta, eps=LR_EPS, tol: float = 1e-12):
    """One-sided limits ``(phi_l, phi_r)`` of the angular function at ``zeta``.

    ``phi`` is evaluated at ``zeta +- eps*n`` (``n`` the unit left normal, the
    normal bisector at a vertex) and Richardson-extrapolated to ``eps = 0``.
    For ``zeta`` off the polyline both values equal ``phi(K, zeta)``.
    """
    zeta = complex(zeta)
    kind, i = _locate(p, zeta, tol)
    if kind is None:
        phi = angular_function(p, zeta)
        return phi, phi
    a, b = p.edges()
    d = b - a
    n_v = len(p)
    if kind == "vertex":
        if not p.closed and (i == 0 or i == n_v - 1):
            raise ValueError("left/right angles need an interior point of the polyline")
        t_in = d[i - 1] / abs(d[i - 1])
        t_out = d[i % d.size] / abs(d[i % d.size])
        nrm = 1j * (t_in + t_out)
        local = min(abs(d[i - 1]), abs(d[i % d.size]))
        if abs(nrm) < 1e-12:
            raise ValueError("polyline reverses direction at this vertex")
        nrm /= abs(nrm)
    else:
        nrm = 1j * d[i] / abs(d[i])
        local = min(abs(zeta - a[i]), abs(zeta - b[i]))
    shrink = min(1.0, 0.1 * local / max(eps))
    eps = np.asarray(eps, dtype=float) * shrink

    def extrapolate(sign):
        vals = [math.fsum(angular_increments(p, zeta + sign * e * nrm)) for e in eps]
        r1 = 2 * vals[1] - vals[0]
        r2 = 2 * vals[2] - vals[1]
        if abs(r2 - r1) > 1e-4:
            warnings.warn(f"left/right angle extrapolation disagreement {abs(r2 - r1):.2g}", CurveWarning)
        return (4 * r2 - r1) / 3

    return float(extrapolate(1.0)), float(extrapolate(-1.0))


def alexandrov_bound_check(p: Polyline, rtol: float = 1e-12) -> dict:
    """Alexandrov inequality and the diameter bound for an arc with ``|kappa| < pi``.

    ``cos(|kappa|/2) s(K) <= |z1 - z2|`` and ``s(K) <= diam/2 (|kappa| + pi)``.
    """
    if p.closed:
        raise ValueError("the Alexandrov inequality concerns open arcs")
    k = abs_rotation(p)
    if not k < math.pi:
        raise ValueError("absolute rotation must be smaller than pi")
    s = euclid_length(p)
    lhs = math.cos(k / 2) * s
    rhs = abs(p.end - p.start)
    v = p.vertices
    diam = float(np.max(np.abs(v[:, None] - v[None, :])))
    dl = s
    dr = diam / 2 * (k + math.pi)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "holds": lhs <= rhs * (1 + rtol) + rtol,
        "diam_lhs": dl,
        "diam_rhs": dr,
        "diam_holds": dl <= dr * (1 + rtol) + rtol,
        "abs_rotation": k,
    }


def read_polyline(path) -> Polyline:
    """Read ``x,y`` rows; an optional first line ``# closed=true|false``."""
    closed = False
    pts = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            first = row[0].strip()
            if first.startswith("#"):
                key = ",".join(row).lstrip("#").strip().replace(" ", "")
                if key.startswith("closed="):
                    val = key.split("=", 1)[1].lower()
                    if val not in ("true", "false"):
                        raise ValueError(f"{path}:{lineno}: closed must be true or false")
                    closed = val == "true"
                continue
            if first.lower() == "x":
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns x,y")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric coordinate") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"{path}:{lineno}: non-finite coordinate")
            pts.append(complex(x, y))
    return Polyline(np.array(pts), closed=closed)


def write_polyline(p: Polyline, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# closed={'true' if p.closed else 'false'}\n")
        w = csv.writer(fh)
        for z in p.vertices:
            w.writerow([repr(float(z.real)), repr(float(z.imag))])
