"""Canonical stretching and desk-scale convergence experiments."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .cone import ConeSpec, cone_distance
from .curves import circle_polygon
from .measure import Domain, GridDensity, HarmonicPoly, SignedMeasure
from .metric import DistanceOptions, DistanceSolver, polyline_length
from .potential import Derivation, MetricScene, mollify

__all__ = [
    "stretch_factor",
    "stretch",
    "annulus_pairs",
    "ExperimentTable",
    "stretch_experiment",
    "converge_experiment",
]

TWO_PI = 2 * math.pi


def stretch_factor(scene: MetricScene, z0, r: float, n: int = 1024) -> float:
    """``c(r) = (2 pi / s(C_r(z0)))^2``.

    The circle length comes from inscribed ``n``- and ``2n``-gons, whose
    ``O(n^-2)`` deficit is removed by Richardson extrapolation.
    """
    s1 = polyline_length(scene, circle_polygon(z0, r, n))
    s2 = polyline_length(scene, circle_polygon(z0, r, 2 * n))
    s = (4 * s2 - s1) / 3
    if not (math.isfinite(s) and s > 0):
        raise ValueError(f"circle length must be finite and positive (got {s})")
    return (TWO_PI / s) ** 2


def _explicit_stretch(scene: MetricScene, z0: complex, r: float, c: float, domain: Domain) -> MetricScene:
    """Rewrite ``c r^2 lambda(z0 + r z)`` as a scene with its own measure and harmonic term.

    ``p(z0 + r z; omega) = p(z; omega') + omega(C) ln(r) / 2pi`` where ``omega'``
    is ``omega`` moved by ``zeta -> (zeta - z0) / r``; the constants go into ``h``.
    """
    m = scene.measure
    atoms = tuple(((p - z0) / r, w) for p, w in m.atoms)
    discs = tuple(((q - z0) / r, rad / r, mm) for q, rad, mm in m.disc_densities)
    circles = tuple(((q - z0) / r, rad / r, mm) for q, rad, mm in m.circle_densities)
    grid = None
    if m.grid is not None:
        g = m.grid
        grid = GridDensity((g.origin - z0) / r, g.cell / r, g.masses)
    moved = SignedMeasure(atoms, discs, circles, grid)
    P = Polynomial(np.array(tuple(scene.harmonic.coeffs) or (0j,), dtype=complex))(Polynomial([z0, r]))
    coeffs = np.array(P.coef, dtype=complex)
    coeffs[0] += m.total_mass() / TWO_PI * math.log(r) - 0.5 * math.log(c * r * r)
    return MetricScene(domain, moved, HarmonicPoly(tuple(coeffs)))


def stretch(scene: MetricScene, z0, r: float, n: int = 1024, check: bool = True) -> MetricScene:
    """The canonical stretching ``lambda_{r,z0}(z) = c(r) r^2 lambda(z0 + r z)``.

    The factor ``c(r)`` makes the stretched unit circle have length ``2 pi``.
    The result lives on the image of the original domain under
    ``zeta -> (zeta - z0) / r``; for an explicit scene the measure and the
    harmonic term are moved along, otherwise a derived scene is returned.
    """
    z0 = complex(z0)
    dom = scene.domain
    if not r > 0:
        raise ValueError("radius must be positive")
    if not dom.contains_closed_disc(z0, r):
        raise ValueError("the closed disc Q_r(z0) must lie inside the domain")
    c = stretch_factor(scene, z0, r, n)
    new_dom = Domain((dom.center - z0) / r, dom.radius / r)
    if scene.is_derived:
        out = MetricScene(new_dom, derivation=Derivation(scene, (z0, r), c))
    else:
        out = _explicit_stretch(scene, z0, r, c, new_dom)
    if check:
        s1 = polyline_length(out, circle_polygon(0j, 1.0, n))
        if abs(s1 - TWO_PI) > 1e-3 * TWO_PI:
            raise RuntimeError(f"stretched unit circle has length {s1}, expected 2 pi")
    return out


def annulus_pairs(eps: float, n_pairs: int, seed: int = 0, outer: float = 1.0, min_sep: float = 0.05):
    """Random pairs in the annulus ``eps < |z| < outer`` (fixed seed)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_pairs:
        rad = np.sqrt(rng.uniform(eps * eps, outer * outer, 2))
        ang = rng.uniform(0.0, TWO_PI, 2)
        a, b = rad * np.exp(1j * ang)
        if abs(a - b) > min_sep:
            out.append((complex(a), complex(b)))
    return out


@dataclass
class ExperimentTable:
    """Rows of ``(parameter, sup discrepancy, mean discrepancy)`` with a monotonicity flag."""

    parameter: str
    rows: list = field(default_factory=list)
    decreasing: bool = True
    noise: float = 0.0

    def sups(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    def as_csv_rows(self):
        yield [self.parameter, "sup_discrepancy", "mean_discrepancy"]
        for row in self.rows:
            yield [repr(float(v)) for v in row]


def _query_all(solver: DistanceSolver, pairs, threads: int = 1) -> np.ndarray:
    """Distances for all pairs; results keep the input order whatever ``threads`` is."""
    def one(pair):
        return solver.query(pair[0], pair[1]).value

    if threads <= 1:
        return np.array([one(p) for p in pairs])
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return np.array(list(ex.map(one, pairs)))


def _flag(table: ExperimentTable, tail: Optional[int] = None):
    s = table.sups()
    tail_s = s if tail is None else s[-tail:]
    table.decreasing = bool(np.all(np.diff(tail_s) < table.noise)) if tail_s.size > 1 else True
    return table


def stretch_experiment(
    scene: MetricScene,
    z0,
    radii: Sequence[float],
    eps: float = 0.3,
    pairs=None,
    n_pairs: int = 12,
    seed: int = 0,
    opts: Optional[DistanceOptions] = None,
    threads: int = 1,
) -> ExperimentTable:
    """Sup over annulus pairs of ``|rho_stretched - rho_cone|`` for decreasing ``r``.

    The limiting cone has curvature ``omega({z0})`` at 0. Discrepancies that
    fail to decrease are flagged through ``ExperimentTable.decreasing``.
    """
    z0 = complex(z0)
    w0 = scene.point_mass(z0)
    cone = ConeSpec(0j, w0)
    if pairs is None:
        pairs = annulus_pairs(eps, n_pairs, seed)
    opts = opts or DistanceOptions(region=(0j, 1.25))
    exact = np.array([cone_distance(cone, a, b) for a, b in pairs])
    table = ExperimentTable("r", noise=0.0)
    for r in sorted(radii, reverse=True):
        st = stretch(scene, z0, r)
        solver = DistanceSolver(st, opts)
        d = _query_all(solver, pairs, threads)
        gap = np.abs(d - exact)
        table.rows.append((float(r), float(gap.max()), float(gap.mean())))
    return _flag(table)


def converge_experiment(
    scene: MetricScene,
    h_scales: Sequence[float],
    sample_pairs,
    opts: Optional[DistanceOptions] = None,
    grid_n: int = 48,
    reference=None,
    threads: int = 1,
) -> ExperimentTable:
    """Sup over sample pairs of ``|rho_{lambda_h} - rho_lambda|`` for decreasing ``h``.

    Every point must satisfy ``omega+({z}) < 2 pi``. ``reference`` may supply
    precomputed limit distances, otherwise they come from the solver on the
    unmollified scene.
    """
    scene.require_base("converge_experiment")
    opts = opts or DistanceOptions()
    for pair in sample_pairs:
        for z in pair:
            if max(scene.point_mass(complex(z)), 0.0) >= TWO_PI:
                raise ValueError(f"sample point {z} carries mass >= 2 pi")
    if reference is None:
        solver = DistanceSolver(scene, opts)
        reference = _query_all(solver, sample_pairs, threads)
    reference = np.asarray(reference, dtype=float)
    table = ExperimentTable("h", noise=2 * opts.tol * float(np.max(reference)))
    for h in sorted(h_scales, reverse=True):
        mh = mollify(scene.measure, h, grid_n=grid_n)
        sh = MetricScene(scene.domain, mh, scene.harmonic)
        solver = DistanceSolver(sh, opts)
        d = _query_all(solver, sample_pairs, threads)
        gap = np.abs(d - reference)
        table.rows.append((float(h), float(gap.max()), float(gap.mean())))
    return _flag(table)
