import math

import numpy as np
import pytest

from subharmonic import (
    ConeSpec,
    Domain,
    HarmonicPoly,
    MetricScene,
    Polyline,
    SignedMeasure,
    angular_function,
    circle_polygon,
    comparison_excess,
    cone_distance,
    cone_geodesic,
    enclosed_mass,
    gauss_bonnet_defect,
    left_turn,
    right_turn,
    rotation,
    subharmonic_angle,
)
from subharmonic.turn import split_defect, turns, winding_number

TWO_PI = 2 * math.pi
D = Domain(0j, 5.0)
SQUARE = Polyline([-0.5 - 0.5j, 0.5 - 0.5j, 0.5 + 0.5j, -0.5 + 0.5j], closed=True)
MIXED = MetricScene(
    D,
    SignedMeasure(
        atoms=((0.8 + 1j, 1.0), (2 + 0j, -0.5)),
        disc_densities=((-1 + 1j, 0.5, 2.0),),
        circle_densities=((0.5 - 0.5j, 0.7, -1.2),),
    ),
    HarmonicPoly((0j, 0.3 + 0.1j, 0.2j)),
)


def test_left_turn_flat_is_rotation():
    p = Polyline([0, 1, 1.5 + 0.8j, 1 + 2j])
    assert left_turn(MetricScene(D), p) == pytest.approx(rotation(p), abs=1e-15)


def test_left_turn_linear_harmonic():
    sc = MetricScene(D, harmonic=HarmonicPoly((0j, 1 + 0j)))
    assert left_turn(sc, Polyline([0, 1j])) == pytest.approx(-1.0)


def test_left_turn_cone_arc():
    w0 = 1.0
    sc = MetricScene(D, SignedMeasure.atom(0j, w0))
    arc = Polyline(1 + 0.5 * np.exp(1j * np.linspace(-1, 1.5, 400)))
    expected = rotation(arc) - w0 / TWO_PI * angular_function(arc, 0j)
    assert left_turn(sc, arc) == pytest.approx(expected, abs=1e-12)


def test_right_turn_without_curvature():
    p = Polyline([0, 1, 1.5 + 0.8j])
    sc = MetricScene(D, harmonic=HarmonicPoly((0j, 0.5j)))
    assert right_turn(sc, p) == pytest.approx(-left_turn(sc, p), abs=1e-14)


def test_turns_sum_to_atom_on_curve():
    p = Polyline([-1, -0.2j, 1])
    sc = MetricScene(D, SignedMeasure.atom(-0.2j, 0.8))
    kl, kr = turns(sc, p)
    assert kl + kr == pytest.approx(0.8, abs=1e-4)


def test_reversal_swaps_turns():
    p = Polyline([0, 1, 1.5 + 0.8j, 1 + 2j])
    kl, kr = turns(MIXED, p)
    rl, rr = turns(MIXED, p.reversed())
    assert rl == pytest.approx(kr, abs=1e-10) and rr == pytest.approx(kl, abs=1e-10)


def test_atom_at_extremity_is_rejected():
    sc = MetricScene(D, SignedMeasure.atom(0j, 1.0))
    with pytest.raises(ValueError):
        left_turn(sc, Polyline([0, 1]))


def test_gauss_bonnet_square_around_atom():
    sc = MetricScene(D, SignedMeasure.atom(0j, 1.0))
    assert left_turn(sc, SQUARE) == pytest.approx(TWO_PI - 1, abs=1e-12)
    assert abs(gauss_bonnet_defect(sc, SQUARE)) < 1e-10


def test_gauss_bonnet_flat_and_outside_atom():
    assert abs(gauss_bonnet_defect(MetricScene(D), circle_polygon(0.2, 1.3, 9))) < 1e-12
    sc = MetricScene(D, SignedMeasure.atom(3 + 0j, 2.0))
    assert abs(gauss_bonnet_defect(sc, SQUARE)) < 1e-12


def test_gauss_bonnet_with_densities():
    p = Polyline([-1.5 + 0.2j, 0.3 - 1.1j, 1.6 - 0.2j, 1.2 + 1.5j, -0.6 + 1.7j], closed=True)
    assert abs(gauss_bonnet_defect(MIXED, p)) < 1e-8


def test_enclosed_mass_and_winding():
    m = SignedMeasure(atoms=((0j, 1.0), (3 + 0j, 2.0)), disc_densities=((0j, 0.25, 0.5),))
    assert enclosed_mass(m, SQUARE) == pytest.approx(1.5, abs=1e-14)
    assert winding_number(SQUARE, 0j) == 1
    assert winding_number(SQUARE.reversed(), 0j) == -1
    # disc straddling the boundary: the quarter inside the first quadrant square
    q = Polyline([0, 1, 1 + 1j, 1j], closed=True)
    half = SignedMeasure(disc_densities=((0j, 0.5, 4.0),))
    assert enclosed_mass(half, q) == pytest.approx(1.0, abs=1e-12)


def test_subharmonic_angle():
    l1, l2 = Polyline([0, 1]), Polyline([0, 1j])
    assert subharmonic_angle(MetricScene(D), l1, l2) == pytest.approx(math.pi / 2)
    sc = MetricScene(D, SignedMeasure.atom(0j, math.pi))
    assert subharmonic_angle(sc, l1, Polyline([0, -1])) == pytest.approx(math.pi / 2)


def test_split_identity():
    p = Polyline([0, 1, 1.5 + 0.8j, 1 + 2j])
    for i in (1, 2):
        assert abs(split_defect(MIXED, p, i)) < 1e-8


def _oracle(c):
    return (lambda z, w: cone_distance(c, z, w)), (lambda z, w: cone_geodesic(c, z, w, n=64))


def test_comparison_flat():
    sc = MetricScene(D)
    d, g = _oracle(ConeSpec(0j, 0.0))
    res = comparison_excess(sc, 0.1 + 0.2j, 1.2 + 0.1j, 0.4 + 1.3j, dist=d, geodesic=g)
    assert res.alpha_bar_estimate - res.alpha0 == pytest.approx(0.0, abs=1e-9)
    assert res.excess_bound_holds


def test_comparison_cone_containing_atom():
    c = ConeSpec(0j, 1.0)
    sc = MetricScene(D, SignedMeasure.atom(0j, 1.0))
    d, g = _oracle(c)
    pts = [0.8 * np.exp(1j * t) for t in (0.3, 2.4, 4.3)]
    total = 0.0
    for k in range(3):
        x, y1, y2 = pts[k], pts[(k + 1) % 3], pts[(k + 2) % 3]
        res = comparison_excess(sc, x, y1, y2, dist=d, geodesic=g)
        assert res.excess_bound_holds
        assert res.omega_plus == pytest.approx(1.0)
        total += res.alpha_bar_estimate - res.alpha0
    # the three excesses of a flat-cone triangle around the vertex add up to omega0
    assert total == pytest.approx(1.0, abs=5e-3)


def test_comparison_triangle_away_from_atom():
    c = ConeSpec(0j, 1.0)
    sc = MetricScene(D, SignedMeasure.atom(0j, 1.0))
    d, g = _oracle(c)
    res = comparison_excess(sc, 1 + 0j, 1.5 + 0.2j, 1.2 + 0.6j, dist=d, geodesic=g)
    assert res.alpha_bar_estimate - res.alpha0 == pytest.approx(0.0, abs=1e-3)
    assert res.omega_plus == 0.0
