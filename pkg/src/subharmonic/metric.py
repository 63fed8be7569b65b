"""Lengths, distances and areas for the metric ``lambda |dz|^2``."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize, sparse
from scipy.sparse import csgraph

from ._kernels import gauss_legendre
from .curves import Polyline
from .measure import Domain
from .potential import Derivation, MetricScene, QuadratureWarning

__all__ = [
    "segment_length",
    "polyline_length",
    "path_length",
    "DistanceOptions",
    "DistanceResult",
    "DistanceSolver",
    "distance",
    "area",
    "pullback",
    "classify_point",
]

TWO_PI = 2.0 * math.pi
_MASS_TOL = 1e-12


def _check_in_domain(scene: MetricScene, pts, what="point"):
    d = scene.domain
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    if np.any(np.abs(pts - d.center) > d.radius * (1 + 1e-12)):
        raise ValueError(f"{what} lies outside the domain")


def _sing_arrays(scene: MetricScene):
    s = scene.singularities()
    if not s:
        return np.zeros(0, dtype=complex), np.zeros(0)
    return np.array([p for p, _ in s], dtype=complex), np.array([w for _, w in s], dtype=float)


# --------------------------------------------------------------------------
# accurate single-segment lengths (QUADPACK)


def segment_length(scene: MetricScene, z1, z2, tol: float = 1e-8, full_output: bool = False):
    """``int_0^1 sqrt(lambda(z1 + t (z2 - z1))) |z2 - z1| dt``.

    Adaptive Gauss-Kronrod quadrature split at the closest approach to each
    atom. Near an atom sitting on the segment with weight ``w < 2pi`` the
    substitution ``t = u**(1/(1+beta))``, ``beta = -w/2pi``, removes the power
    singularity; an atom of weight ``>= 2pi`` on the segment gives ``inf``.
    """
    z1, z2 = complex(z1), complex(z2)
    _check_in_domain(scene, [z1, z2], "segment endpoint")
    d = z2 - z1
    L = abs(d)
    if L == 0.0:
        return (0.0, 0.0) if full_output else 0.0
    pos, wts = _sing_arrays(scene)
    on = []  # (t, beta) of atoms lying on the segment
    cuts = {0.0, 1.0}
    for p, w in zip(pos, wts):
        t = ((np.conj(d) * (p - z1)).real) / (L * L)
        tc = min(1.0, max(0.0, t))
        dist = abs(z1 + tc * d - p)
        if dist <= 1e-13 * max(1.0, L):
            if w >= TWO_PI * (1 - _MASS_TOL):
                return (math.inf, 0.0) if full_output else math.inf
            on.append((tc, -w / TWO_PI))
        if 0.0 < tc < 1.0:
            cuts.add(tc)
    cuts = sorted(cuts)
    sqrt_lam = scene.sqrt_lam

    def f(t):
        return float(sqrt_lam(z1 + t * d)) * L

    total, err = 0.0, 0.0
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        if t1 - t0 <= 0:
            continue
        b0 = next((b for t, b in on if t == t0), None)
        b1 = next((b for t, b in on if t == t1), None)
        pieces = []
        if b0 is not None and b1 is not None:
            tm = 0.5 * (t0 + t1)
            pieces = [(t0, tm, b0, True), (tm, t1, b1, False)]
        elif b0 is not None:
            pieces = [(t0, t1, b0, True)]
        elif b1 is not None:
            pieces = [(t0, t1, b1, False)]
        else:
            pieces = [(t0, t1, None, True)]
        for a, b, beta, left in pieces:
            span = b - a
            if beta is None:
                v, e = _fixed_rule(sqrt_lam, z1, d, a, b, L)
                if not e <= 0.1 * tol:
                    v, e = integrate.quad(f, a, b, epsabs=tol, epsrel=1e-11, limit=200)
            else:
                g = 1.0 / (1.0 + beta)
                if left:
                    fu = lambda u, a=a, span=span, g=g: f(a + span * u ** g) * span * g * u ** (g - 1) if u > 0 else _limit0(f, a, span, g, 1)
                else:
                    fu = lambda u, b=b, span=span, g=g: f(b - span * u ** g) * span * g * u ** (g - 1) if u > 0 else _limit0(f, b, span, g, -1)
                v, e = integrate.quad(fu, 0.0, 1.0, epsabs=tol, epsrel=1e-11, limit=200)
            total += v
            err += e
    if err > 10 * tol + 1e-10 * abs(total):
        warnings.warn(f"segment quadrature error estimate {err:.3g} above tolerance", QuadratureWarning)
    return (total, err) if full_output else total


def _fixed_rule(sqrt_lam, z1, d, a, b, L):
    """Gauss-Legendre with 16 and 32 nodes on a smooth piece; the difference is the error estimate."""
    x16, w16 = gauss_legendre(16)
    x32, w32 = gauss_legendre(32)
    t = np.concatenate([x16, x32]) * (b - a) + a
    vals = np.asarray(sqrt_lam(z1 + t * d), dtype=float) * L * (b - a)
    lo = float(np.dot(w16, vals[:16]))
    hi = float(np.dot(w32, vals[16:]))
    if not math.isfinite(hi):
        return hi, math.inf
    return hi, abs(hi - lo)


def _limit0(f, a, span, g, sign):
    u = 1e-12
    return f(a + sign * span * u ** g) * span * g * u ** (g - 1)


def polyline_length(scene: MetricScene, p: Polyline, tol: float = 1e-8) -> float:
    """lambda-length of a broken line (``inf`` propagates)."""
    a, b = p.edges()
    total = 0.0
    for x, y in zip(a, b):
        s = segment_length(scene, x, y, tol=tol)
        if not math.isfinite(s):
            return math.inf
        total += s
    return total


# --------------------------------------------------------------------------
# batched fixed rules for the solver


_NGL = 8
_GRADE = 0.2


def _piece_nodes(t0, t1, beta, singular_at_start, delta, seg_len):
    """Nodes/weights on ``[t0, t1]`` graded toward one end."""
    x, w = gauss_legendre(_NGL)
    span = t1 - t0
    out_t, out_w = [], []
    if beta is not None and delta == 0.0:
        # beta <= -1 (mass >= 2 pi) gives an infinite length; let it propagate quietly
        with np.errstate(divide="ignore", invalid="ignore"):
            g = 1.0 / (1.0 + beta) if beta > -1 else math.inf
            u = x ** g
            ww = w * g * x ** (g - 1)
        tt = u * span
        out_t.append(tt)
        out_w.append(ww * span)
    else:
        plen = span * seg_len
        K = 0
        if delta < plen:
            K = int(min(14, math.ceil(math.log(max(delta, 1e-14 * plen) / plen) / math.log(_GRADE))))
        hi = span * _GRADE ** np.arange(K + 1)
        lo = np.append(hi[1:], 0.0)
        out_t.append((lo[:, None] + (hi - lo)[:, None] * x[None, :]).ravel())
        out_w.append(((hi - lo)[:, None] * w[None, :]).ravel())
    tt = np.concatenate(out_t)
    ww = np.concatenate(out_w)
    if singular_at_start:
        return t0 + tt, ww
    return t1 - tt, ww


def _segment_rules(a, b, pos, wts, scene_scale=1.0):
    """Quadrature for many segments: returns ``(t, w, seg)`` with
    ``len_j = |d_j| sum_{seg==j} w sqrt(lambda(a_j + t d_j))``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = b - a
    L = np.abs(d)
    m = a.size
    x, w = gauss_legendre(_NGL)
    if pos.size == 0:
        t = np.tile(x, m)
        ww = np.tile(w, m)
        seg = np.repeat(np.arange(m), _NGL)
        return t, ww, seg
    Ls = np.where(L > 0, L, 1.0)
    tt = ((np.conj(d)[:, None] * (pos[None, :] - a[:, None])).real) / (Ls[:, None] ** 2)
    tc = np.clip(tt, 0.0, 1.0)
    dist = np.abs(a[:, None] + tc * d[:, None] - pos[None, :])
    near = dist < L[:, None]
    plain = ~np.any(near, axis=1)
    ts, ws, segs = [], [], []
    idx = np.nonzero(plain)[0]
    ts.append(np.tile(x, idx.size))
    ws.append(np.tile(w, idx.size))
    segs.append(np.repeat(idx, _NGL))
    for j in np.nonzero(~plain)[0]:
        ks = np.nonzero(near[j])[0]
        marks = {}
        for k in ks:
            t0 = float(tc[j, k])
            dd = float(dist[j, k])
            if dd <= 1e-13 * max(1.0, L[j]):
                dd = 0.0
            beta = -wts[k] / TWO_PI
            if t0 not in marks or dd < marks[t0][0]:
                marks[t0] = (dd, beta)
        cuts = sorted(set([0.0, 1.0] + list(marks.keys())))
        for t0, t1 in zip(cuts[:-1], cuts[1:]):
            if t1 <= t0:
                continue
            m0 = marks.get(t0)
            m1 = marks.get(t1)
            pieces = []
            if m0 is not None and m1 is not None:
                tm = 0.5 * (t0 + t1)
                pieces = [(t0, tm, m0, True), (tm, t1, m1, False)]
            elif m0 is not None:
                pieces = [(t0, t1, m0, True)]
            elif m1 is not None:
                pieces = [(t0, t1, m1, False)]
            else:
                pieces = [(t0, t1, (math.inf, None), True)]
            for p0, p1, (dd, beta), start in pieces:
                if beta is None:
                    tq = p0 + (p1 - p0) * x
                    wq = (p1 - p0) * w
                else:
                    tq, wq = _piece_nodes(p0, p1, beta, start, dd, L[j])
                ts.append(tq)
                ws.append(wq)
                segs.append(np.full(tq.size, j))
    return np.concatenate(ts), np.concatenate(ws), np.concatenate(segs)


def path_length(scene: MetricScene, verts, grad: bool = False, sing=None):
    """lambda-length of the broken line through ``verts`` with a fixed rule.

    With ``grad`` also returns d length / d vertex packed as ``x + i y``.
    """
    v = np.asarray(verts, dtype=complex)
    a, b = v[:-1], v[1:]
    pos, wts = _sing_arrays(scene) if sing is None else sing
    t, w, seg = _segment_rules(a, b, pos, wts)
    d = b - a
    L = np.abs(d)
    z = a[seg] + t * d[seg]
    ls = scene.log_sqrt_lambda(z)
    with np.errstate(over="ignore", invalid="ignore"):
        s = np.exp(ls)
    contrib = w * s * L[seg]
    total = float(np.sum(contrib))
    if not grad:
        return total
    if not math.isfinite(total):
        return total, np.zeros(v.shape, dtype=complex)
    G = scene.grad_log_sqrt_lambda(z)
    G = np.where(np.isfinite(G), G, 0.0)
    u = np.where(L > 0, d / np.where(L > 0, L, 1.0), 0.0)
    ga = w * s * ((1 - t) * L[seg] * G - u[seg])
    gb = w * s * (t * L[seg] * G + u[seg])
    g = np.zeros(v.shape, dtype=complex)
    np.add.at(g, seg, ga)
    np.add.at(g, seg + 1, gb)
    return total, g


# --------------------------------------------------------------------------
# point classification


def classify_point(scene: MetricScene, z, tol: float = 1e-12) -> str:
    """``'finite'``, ``'infinity'`` or ``'ambiguous'`` for the point ``z``.

    ``omega+({z}) < 2pi`` is finite; ``omega({z}) > 2pi`` is at infinity, as
    is ``omega({z}) = 2pi`` for a positive measure; a signed measure with
    ``omega+({z}) = 2pi`` is undecided.
    """
    _check_in_domain(scene, z)
    w = scene.point_mass(complex(z), tol=tol)
    pos_mass = max(w, 0.0)
    if pos_mass < TWO_PI * (1 - _MASS_TOL):
        return "finite"
    if w > TWO_PI * (1 + _MASS_TOL):
        return "infinity"
    if scene.is_positive_measure():
        return "infinity"
    return "ambiguous"


# --------------------------------------------------------------------------
# distances


@dataclass
class DistanceOptions:
    grid: int = 64
    tol: float = 1e-4
    allow_infinite: bool = False
    max_vertices: int = 256
    start_vertices: int = 16
    region: Optional[tuple] = None  # (center, radius) of the search disc
    final_quad: bool = True


@dataclass
class DistanceResult:
    value: float
    witness: Optional[Polyline]
    history: list = field(default_factory=list)
    candidates: int = 0

    def __float__(self):
        return float(self.value)


_OFFSETS = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)]


class DistanceSolver:
    """Two-stage solver for the distance ``rho_lambda`` on one scene.

    Stage 1 runs Dijkstra on a 16-neighbour lattice graph whose edge weights
    are segment lengths; stage 2 polishes candidate paths (the Dijkstra path,
    the straight segment, paths passing an atom on its other side, and paths
    pinned at non-positive atoms) with L-BFGS over the free vertices and
    midpoint insertion until the relative improvement falls below ``tol``.
    The lattice graph is built once and shared by all queries.
    """

    def __init__(self, scene: MetricScene, opts: Optional[DistanceOptions] = None):
        self.scene = scene
        self.opts = opts or DistanceOptions()
        dom = scene.domain
        if self.opts.region is None:
            self.rc, self.rr = dom.center, dom.radius * (1 - 1e-9)
        else:
            self.rc, self.rr = complex(self.opts.region[0]), float(self.opts.region[1])
            if abs(self.rc - dom.center) + self.rr > dom.radius * (1 + 1e-12):
                raise ValueError("search region must lie inside the domain")
        self.sing = _sing_arrays(scene)
        self._build()

    # ---- stage 1

    def _build(self):
        n = int(self.opts.grid)
        if n < 4:
            raise ValueError("grid must have at least 4 points per side")
        h = 2 * self.rr / (n - 1)
        self.h = h
        xs = np.arange(n) * h - self.rr
        Z = self.rc + xs[None, :] + 1j * xs[:, None]
        inside = np.abs(Z - self.rc) <= self.rr
        index = -np.ones((n, n), dtype=int)
        index[inside] = np.arange(int(inside.sum()))
        nodes = list(Z[inside])
        rows, cols = [], []
        for dx, dy in _OFFSETS:
            i0 = index[max(0, -dy):n - max(0, dy), max(0, -dx):n - max(0, dx)]
            i1 = index[max(0, dy):n + min(0, dy), max(0, dx):n + min(0, dx)]
            ok = (i0 >= 0) & (i1 >= 0)
            rows.append(i0[ok])
            cols.append(i1[ok])
        pos, wts = self.sing
        in_region = np.abs(pos - self.rc) < self.rr
        self.atom_nodes = {}
        nodes = np.array(nodes, dtype=complex)
        extra = []
        for p, w in zip(pos[in_region], wts[in_region]):
            if w >= TWO_PI * (1 - _MASS_TOL):
                continue
            hit = np.nonzero(nodes == p)[0]
            if hit.size:
                self.atom_nodes[complex(p)] = int(hit[0])
                continue
            k = nodes.size + len(extra)
            extra.append(p)
            self.atom_nodes[complex(p)] = k
        if extra:
            nodes = np.concatenate([nodes, np.array(extra, dtype=complex)])
        self.nodes = nodes
        r = np.concatenate(rows) if rows else np.zeros(0, dtype=int)
        c = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
        for p, k in self.atom_nodes.items():
            nb = self._neighbours(p, exclude=k)
            r = np.concatenate([r, np.full(nb.size, k)])
            c = np.concatenate([c, nb])
        wgt = self._edge_lengths(nodes[r], nodes[c])
        ok = np.isfinite(wgt) & (wgt > 0)
        self.er, self.ec, self.ew = r[ok], c[ok], wgt[ok]

    def _neighbours(self, z, exclude=-1):
        d = np.abs(self.nodes - z)
        nb = np.nonzero((d <= 2.5 * self.h) & (d > 0))[0]
        return nb[nb != exclude]

    def _edge_lengths(self, a, b):
        out = np.zeros(a.size)
        chunk = 20000
        for s in range(0, a.size, chunk):
            aa, bb = a[s:s + chunk], b[s:s + chunk]
            t, w, seg = _segment_rules(aa, bb, *self.sing)
            d = bb - aa
            z = aa[seg] + t * d[seg]
            with np.errstate(over="ignore", invalid="ignore"):
                v = w * np.exp(self.scene.log_sqrt_lambda(z)) * np.abs(d)[seg]
            v = np.where(np.isnan(v), np.inf, v)
            out[s:s + chunk] = np.bincount(seg, weights=v, minlength=aa.size)
        return out

    def _graph_with(self, pts):
        """Graph with the points ``pts`` appended (or matched to existing nodes)."""
        N = self.nodes.size
        ids = []
        r_extra, c_extra, new = [], [], []
        for z in pts:
            hit = np.nonzero(self.nodes == z)[0]
            if hit.size:
                ids.append(int(hit[0]))
                continue
            same = [k for k, q in enumerate(new) if q == z]
            if same:
                ids.append(N + same[0])
                continue
            k = N + len(new)
            new.append(z)
            ids.append(k)
            nb = self._neighbours(z)
            r_extra.append(np.full(nb.size, k))
            c_extra.append(nb)
        allnodes = np.concatenate([self.nodes, np.array(new, dtype=complex)]) if new else self.nodes
        if r_extra:
            re = np.concatenate(r_extra)
            ce = np.concatenate(c_extra)
            we = self._edge_lengths(allnodes[re], allnodes[ce])
            ok = np.isfinite(we) & (we > 0)
            re, ce, we = re[ok], ce[ok], we[ok]
        else:
            re = ce = np.zeros(0, dtype=int)
            we = np.zeros(0)
        M = allnodes.size
        r = np.concatenate([self.er, re, self.ec, ce])
        c = np.concatenate([self.ec, ce, self.er, re])
        w = np.concatenate([self.ew, we, self.ew, we])
        G = sparse.csr_matrix((w, (r, c)), shape=(M, M))
        return G, ids, allnodes

    @staticmethod
    def _trace(pred, src, dst):
        path = [dst]
        k = dst
        while k != src:
            k = pred[k]
            if k < 0:
                return None
            path.append(k)
        return path[::-1]

    # ---- stage 2

    def _objective(self, free_idx, verts):
        R = self.scene.domain.radius
        C = self.scene.domain.center
        pen = 1e3 * max(1.0, R)

        def fun(x):
            v = verts.copy()
            v[free_idx] = x[0::2] + 1j * x[1::2]
            val, g = path_length(self.scene, v, grad=True, sing=self.sing)
            if not math.isfinite(val):
                return 1e300, np.zeros_like(x)
            out = np.abs(v[free_idx] - C)
            over = np.maximum(out - R * (1 - 1e-9), 0.0)
            val += pen * float(np.sum(over ** 2))
            gf = g[free_idx] + 2 * pen * over * (v[free_idx] - C) / np.where(out > 0, out, 1.0)
            gx = np.empty_like(x)
            gx[0::2] = gf.real
            gx[1::2] = gf.imag
            return val, gx

        return fun

    def _optimize(self, verts, fixed):
        free_idx = np.nonzero(~fixed)[0]
        if free_idx.size == 0:
            return verts, path_length(self.scene, verts, sing=self.sing)
        fun = self._objective(free_idx, verts)
        x0 = np.empty(2 * free_idx.size)
        x0[0::2] = verts[free_idx].real
        x0[1::2] = verts[free_idx].imag
        f0 = fun(x0)[0]
        res = optimize.minimize(fun, x0, jac=True, method="L-BFGS-B", options={"maxiter": 400, "ftol": 1e-13, "gtol": 1e-11})
        if res.fun <= f0 and np.all(np.isfinite(res.x)):
            out = verts.copy()
            out[free_idx] = res.x[0::2] + 1j * res.x[1::2]
            return out, path_length(self.scene, out, sing=self.sing)
        return verts, path_length(self.scene, verts, sing=self.sing)

    def _refine(self, verts, fixed, history):
        """Alternate L-BFGS rounds and midpoint insertion; monotone in length."""
        best_v, best_len = verts, path_length(self.scene, verts, sing=self.sing)
        history.append(best_len)
        while True:
            v, l = self._optimize(best_v, fixed)
            if l < best_len:
                improvement = (best_len - l) / max(l, 1e-300)
                best_v, best_len = v, l
                history.append(best_len)
            else:
                improvement = 0.0
            n_edges = best_v.size - 1
            if n_edges * 2 > self.opts.max_vertices:
                break
            if improvement < self.opts.tol and n_edges >= 2 * self.opts.start_vertices:
                break
            mid = 0.5 * (best_v[:-1] + best_v[1:])
            nv = np.empty(2 * best_v.size - 1, dtype=complex)
            nv[0::2] = best_v
            nv[1::2] = mid
            nf = np.zeros(nv.size, dtype=bool)
            nf[0::2] = fixed
            best_v, fixed = nv, nf
        return best_v, fixed, best_len

    def _initial(self, pts, pinned):
        """Resample a path to ``start_vertices`` edges between pinned points."""
        n0 = self.opts.start_vertices
        pts = np.asarray(pts, dtype=complex)
        keep = np.concatenate([[True], np.diff(pts) != 0])
        pts = pts[keep]
        pin_pos = [pts[0]] + [p for p in pinned] + [pts[-1]]
        out, fixed = [pts[0]], [True]
        cursor = 0
        for target in pin_pos[1:]:
            k = cursor + int(np.nonzero(pts[cursor:] == target)[0][0]) if np.any(pts[cursor:] == target) else pts.size - 1
            piece = pts[cursor:k + 1]
            if piece.size < 2:
                continue
            pl = Polyline(piece).resample(n0)
            out.extend(pl.vertices[1:])
            fixed.extend([False] * (pl.vertices.size - 2) + [True])
            cursor = k
        return np.array(out), np.array(fixed)

    def query(self, z1, z2) -> DistanceResult:
        z1, z2 = complex(z1), complex(z2)
        sc = self.scene
        for z in (z1, z2):
            if abs(z - self.rc) > self.rr * (1 + 1e-12):
                raise ValueError("endpoint lies outside the search region")
            cls = classify_point(sc, z)
            if cls != "finite":
                if not self.opts.allow_infinite:
                    raise ValueError(f"point possibly at infinity ({cls}) at {z}")
                return DistanceResult(math.inf, None)
        if z1 == z2:
            return DistanceResult(0.0, None)
        flip = (z1.real, z1.imag) > (z2.real, z2.imag)
        if flip:
            z1, z2 = z2, z1
        G, (i1, i2), allnodes = self._graph_with([z1, z2])
        straight = path_length(sc, np.linspace(z1, z2, 2 * self.opts.start_vertices + 1), sing=self.sing)
        limit = straight * (1 + 1e-9) if math.isfinite(straight) else np.inf
        D, P = csgraph.dijkstra(G, indices=[i1, i2], return_predecessors=True, limit=limit)
        D1, D2 = D
        cands = []
        if math.isfinite(straight):
            cands.append((np.array([z1, z2]), []))
        grid_path = self._trace(P[0], i1, i2)
        if grid_path is not None:
            cands.append((allnodes[grid_path], []))
        # homotopy alternatives around each atom and pinned paths through
        # atoms of non-positive curvature
        pos, wts = self.sing
        tot = D1 + D2
        for p, w in zip(pos, wts):
            if abs(p - self.rc) >= self.rr:
                continue
            if grid_path is not None:
                base = allnodes[grid_path]
                phi_base = float(np.sum(np.angle((base[1:] - p) / np.where(base[:-1] == p, 1e-300, base[:-1] - p))))
                with np.errstate(invalid="ignore", divide="ignore"):
                    proxy = np.angle((allnodes - p) / (z1 - p)) + np.angle((z2 - p) / (allnodes - p))
                other = np.abs(proxy - phi_base) > math.pi
                cand_tot = np.where(other & np.isfinite(tot), tot, np.inf)
                kv = int(np.argmin(cand_tot))
                if math.isfinite(cand_tot[kv]):
                    a = self._trace(P[0], i1, kv)
                    b = self._trace(P[1], i2, kv)
                    if a is not None and b is not None:
                        cands.append((allnodes[a + b[::-1][1:]], []))
            if w < 0 and complex(p) in self.atom_nodes:
                k = self.atom_nodes[complex(p)]
                if math.isfinite(tot[k]):
                    a = self._trace(P[0], i1, k)
                    b = self._trace(P[1], i2, k)
                    if a is not None and b is not None:
                        cands.append((allnodes[a + b[::-1][1:]], [complex(p)]))
        if not cands:
            return DistanceResult(math.inf, None)
        # coarse polish of every candidate, full refinement of the promising ones
        coarse = []
        for pts, pinned in cands:
            v, fx = self._initial(pts, pinned)
            v, lv = self._optimize(v, fx)
            coarse.append((lv, v, fx))
        coarse.sort(key=lambda c: c[0])
        best = None
        history = []
        for lv, v, fx in coarse:
            if best is not None and lv > best[0] * 1.02:
                break
            hist = []
            v2, fx2, l2 = self._refine(v, fx, hist)
            if best is None or l2 < best[0]:
                best = (l2, v2)
                history = hist
        value, verts = best
        if flip:
            verts = verts[::-1]
        witness = Polyline(verts)
        if self.opts.final_quad:
            value = polyline_length(sc, witness)
        return DistanceResult(value, witness, history, len(cands))


_SOLVERS: dict = {}


def distance(scene: MetricScene, z1, z2, opts: Optional[DistanceOptions] = None) -> DistanceResult:
    """``rho_lambda(z1, z2)`` with a witness broken line."""
    opts = opts or DistanceOptions()
    key = (id(scene), opts.grid, opts.region, opts.tol, opts.max_vertices, opts.start_vertices, opts.allow_infinite)
    hit = _SOLVERS.get(key)
    if hit is None or hit.scene is not scene:
        if len(_SOLVERS) > 8:
            _SOLVERS.clear()
        hit = DistanceSolver(scene, opts)
        _SOLVERS[key] = hit
    return hit.query(z1, z2)


# --------------------------------------------------------------------------
# areas


def _tri_rule(n):
    x, w = gauss_legendre(n)
    U, S = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return U.ravel(), S.ravel(), W.ravel()


def _tri_integrals(scene, A, B, C, q, n):
    """Integral of lambda over triangles ``(A, B, C)``.

    ``q = 2 beta + 2 > 0`` grades the apex ``A`` where ``lambda ~ |z - A|^(2 beta)``;
    ``q = 0`` means a plain Duffy rule.
    """
    U, S, W = _tri_rule(n)
    xi = U[None, :]
    graded = q[:, None] > 0
    qq = np.where(graded, q[:, None], 1.0)
    u = np.where(graded, xi ** (1.0 / qq), xi)
    jw = np.where(graded, (1.0 / qq) * xi ** (2.0 / qq - 1.0), xi)
    e1 = (B - A)[:, None]
    e2 = (C - B)[:, None]
    z = A[:, None] + u * (e1 + S[None, :] * e2)
    lam = scene.lam(z)
    two_t = np.abs((np.conj(B - A) * (C - B)).imag)
    return two_t * np.sum(lam * jw * W[None, :], axis=1)


def _adaptive_triangles(scene, tris, tol):
    """``tris`` is a list of ``(A, B, C, q)``; returns the integral and an error estimate.

    Plain triangles split in four. An apex-graded triangle splits into its
    half-size copy at the apex, itself bisected so the angular resolution
    improves, plus the remaining trapezoid as two plain triangles.
    """
    total = 0.0
    err_total = 0.0
    A = np.array([t[0] for t in tris], dtype=complex)
    B = np.array([t[1] for t in tris], dtype=complex)
    C = np.array([t[2] for t in tris], dtype=complex)
    Q = np.array([t[3] for t in tris], dtype=float)
    area0 = float(np.sum(np.abs((np.conj(B - A) * (C - B)).imag))) / 2
    scale = None
    max_level = 48
    for level in range(max_level):
        if not A.size:
            break
        lo = _tri_integrals(scene, A, B, C, Q, 6)
        hi = _tri_integrals(scene, A, B, C, Q, 12)
        if scale is None:
            scale = abs(float(np.sum(hi)))
        err = np.abs(hi - lo)
        tri_area = np.abs((np.conj(B - A) * (C - B)).imag) / 2
        share = tol * np.maximum(np.abs(hi), scale * tri_area / max(area0, 1e-300))
        done = (err <= share) | (err <= 1e-3 * tol * scale) | (level == max_level - 1)
        total += float(np.sum(hi[done]))
        err_total += float(np.sum(err[done]))
        A, B, C, Q = A[~done], B[~done], C[~done], Q[~done]
        g = Q > 0
        Ag, Bg, Cg, Qg = A[g], B[g], C[g], Q[g]
        m1, m2 = (Ag + Bg) / 2, (Ag + Cg) / 2
        mm = (m1 + m2) / 2
        Ap, Bp, Cp = A[~g], B[~g], C[~g]
        mab, mbc, mca = (Ap + Bp) / 2, (Bp + Cp) / 2, (Cp + Ap) / 2
        zg = np.zeros(Ag.size)
        zp = np.zeros(Ap.size)
        A = np.concatenate([Ag, Ag, m1, m1, Ap, mab, mca, mbc])
        B = np.concatenate([m1, mm, Bg, Cg, mab, Bp, mbc, mca])
        C = np.concatenate([mm, m2, Cg, m2, mca, mbc, Cp, mab])
        Q = np.concatenate([Qg, Qg, zg, zg, zp, zp, zp, zp])
    return total, err_total


def _polygon_triangles(verts, atoms):
    """Fan triangulation of a star-shaped polygon with every atom as an apex."""
    v = np.asarray(verts, dtype=complex)
    signed = float(np.sum((np.conj(v) * np.roll(v, -1)).imag)) / 2
    if signed < 0:
        v = v[::-1]
    c = complex(np.mean(v))
    tris = []
    for a, b in zip(v, np.roll(v, -1)):
        if (np.conj(a - c) * (b - c)).imag <= 0:
            raise ValueError("area region must be star-shaped about its vertex centroid")
        tris.append([c, a, b, 0.0])
    for p, w in atoms:
        q = 2.0 - w / math.pi
        if any(t[0] == p for t in tris):
            for t in tris:
                if t[0] == p:
                    t[3] = q
            continue
        new = []
        for t in tris:
            A, B, C, _ = t
            if np.all(_barycentric(p, A, B, C) >= -1e-14):
                for X, Y in ((A, B), (B, C), (C, A)):
                    if abs((np.conj(X - p) * (Y - p)).imag) > 1e-14 * abs(X - Y) ** 2:
                        new.append([p, X, Y, q])
            else:
                new.append(t)
        tris = new
    return [tuple(t) for t in tris]


def _barycentric(p, A, B, C):
    det = ((B - A).conjugate() * (C - A)).imag
    l1 = ((B - p).conjugate() * (C - p)).imag / det
    l2 = ((C - p).conjugate() * (A - p)).imag / det
    return np.array([l1, l2, 1 - l1 - l2])


def _in_polygon(p, verts):
    v = np.asarray(verts, dtype=complex)
    return abs(float(np.sum(np.angle((np.roll(v, -1) - p) / (v - p))))) > math.pi


def area(scene: MetricScene, region, tol: float = 1e-8) -> float:
    """``iint_E lambda`` for a rectangle ``(x0, y0, x1, y1)``, a disc
    ``('disc', center, radius)`` or a star-shaped polygon (array of vertices).

    Atoms inside the region become apexes of graded triangles; a positive atom
    of weight ``>= 2pi`` in the closed region gives ``inf``.
    """
    if isinstance(region, tuple) and len(region) == 3 and region[0] == "disc":
        _, c, R = region
        n = 4096
        verts = complex(c) + R * np.exp(1j * np.arange(n) * TWO_PI / n)
        disc = (complex(c), float(R))
    elif isinstance(region, (tuple, list)) and len(region) == 4 and all(np.isreal(region)):
        x0, y0, x1, y1 = (float(t) for t in region)
        if not (x1 > x0 and y1 > y0):
            raise ValueError("rectangle must have x0 < x1 and y0 < y1")
        verts = np.array([complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)])
        disc = None
    else:
        verts = np.asarray(region, dtype=complex)
        disc = None
    _check_in_domain(scene, verts, "region")
    pos, wts = _sing_arrays(scene)
    inside = []
    for p, w in zip(pos, wts):
        if disc is not None:
            ins = abs(p - disc[0]) <= disc[1]
        else:
            ins = _in_polygon(p, verts) or np.min(np.abs(verts - p)) == 0
        if ins:
            if w >= TWO_PI * (1 - _MASS_TOL):
                return math.inf
            inside.append((complex(p), float(w)))
    if disc is not None:
        return _disc_area(scene, disc[0], disc[1], inside, tol)
    tris = _polygon_triangles(verts, inside)
    val, err = _adaptive_triangles(scene, tris, tol)
    if err > 1e3 * tol * max(abs(val), 1.0):
        warnings.warn(f"area quadrature error estimate {err:.3g}", QuadratureWarning)
    return val


def _disc_area(scene, c, R, inside, tol):
    """Disc regions in polar coordinates about the centre (exact boundary)."""
    if any(p != c for p, _ in inside):
        n = 2048
        verts = c + R * np.exp(1j * np.arange(n) * TWO_PI / n)
        val, _ = _adaptive_triangles(scene, _polygon_triangles(verts, inside), tol)
        return val
    beta = -inside[0][1] / TWO_PI if inside else 0.0
    q = 2 * beta + 2
    prev = None
    for level in range(2, 8):
        nt = 16 * 2 ** level
        nu = 8 * 2 ** level
        th = np.arange(nt) * (TWO_PI / nt)
        xi, wxi = gauss_legendre(nu)
        u = xi ** (1.0 / q)
        jw = (1.0 / q) * xi ** (2.0 / q - 1.0) * wxi
        z = c + R * u[None, :] * np.exp(1j * th)[:, None]
        val = float(np.sum(scene.lam(z) * jw[None, :])) * R * R * TWO_PI / nt
        if prev is not None and abs(val - prev) <= tol * max(abs(val), 1.0):
            return val
        prev = val
    warnings.warn("disc area quadrature did not converge", QuadratureWarning)
    return val


# --------------------------------------------------------------------------
# conformal pullback


def pullback(scene: MetricScene, f, target_domain: Domain, n_check: int = 24) -> MetricScene:
    """The scene with ``lambda_1 = |f'|^2 lambda o f`` on ``target_domain``.

    ``f`` is a complex polynomial given by its coefficients (ascending). Zeros
    of ``f'`` in the closed target domain, images leaving the source domain
    and detected failures of injectivity are rejected.
    """
    coeffs = tuple(complex(a) for a in f)
    dv = Derivation(scene, coeffs, 1.0)
    c, R = target_domain.center, target_domain.radius
    der = np.polynomial.polynomial.polyder(np.array(coeffs, dtype=complex))
    if np.all(der == 0):
        raise ValueError("f is constant")
    roots = np.polynomial.polynomial.polyroots(der) if der.size > 1 else np.zeros(0)
    if np.any(np.abs(roots - c) <= R * (1 + 1e-3)):
        raise ValueError("f' vanishes in the target domain")
    xs = np.linspace(-1, 1, n_check)
    grid = c + R * (xs[None, :] + 1j * xs[:, None]).ravel()
    grid = grid[np.abs(grid - c) <= R]
    if np.any(np.abs(dv.dmap(grid)) < 1e-12):
        raise ValueError("f' vanishes in the target domain")
    ring = c + R * np.exp(1j * np.linspace(0, TWO_PI, 512, endpoint=False))
    img = dv.map(np.concatenate([ring, grid]))
    if np.any(np.abs(img - scene.domain.center) > scene.domain.radius * (1 + 1e-12)):
        raise ValueError("f maps the target domain outside the source domain")
    pts = np.concatenate([ring[::4], grid])
    im = dv.map(pts)
    dz = np.abs(pts[:, None] - pts[None, :])
    dw = np.abs(im[:, None] - im[None, :])
    np.fill_diagonal(dw, np.inf)
    if np.any((dw < 1e-12 * max(1.0, float(np.max(np.abs(im))))) & (dz > 1e-9)):
        raise ValueError("f is not injective on the target domain")
    return MetricScene(target_domain, derivation=dv)
