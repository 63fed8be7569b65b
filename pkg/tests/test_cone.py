import math

import numpy as np
import pytest

from subharmonic import (
    ConeSpec,
    cone_circle_length,
    cone_distance,
    cone_geodesic,
    cone_scene,
    curvature_factor,
    plane_to_cone,
    polyline_length,
    sector_angle,
    Polyline,
)

TWO_PI = 2 * math.pi


def test_cone_spec():
    c = ConeSpec(0j, math.pi)
    assert c.beta == -0.5 and c.alpha == math.pi
    with pytest.raises(ValueError):
        ConeSpec(0j, TWO_PI)


def test_plane_to_cone_flat_is_polar():
    rho, th = plane_to_cone(ConeSpec(0j, 0.0), 1 + 1j)
    assert rho == pytest.approx(math.sqrt(2)) and th == pytest.approx(math.pi / 4)


def test_plane_to_cone_inverts_radius():
    c = ConeSpec(0j, -math.pi)  # beta = 1/2
    rho, _ = plane_to_cone(c, 1.5 ** (2 / 3))
    assert rho == pytest.approx(1.0, rel=1e-15)


def test_plane_to_cone_angle_range_is_alpha():
    c = ConeSpec(0j, 1.0)
    th = np.linspace(0, TWO_PI, 1001)[:-1]
    _, t = plane_to_cone(c, np.exp(1j * th))
    assert t.max() == pytest.approx(c.alpha * (1 - 1e-3), rel=1e-3)
    assert np.all((t >= 0) & (t < c.alpha))


def test_cone_distance_flat_and_radial():
    assert cone_distance(ConeSpec(0j, 0.0), 1 + 2j, -3 + 0.5j) == pytest.approx(abs(4 + 1.5j))
    c = ConeSpec(0j, math.pi)
    assert cone_distance(c, 0j, 0.25 * np.exp(1.3j)) == pytest.approx(2 * math.sqrt(0.25))


def test_cone_distance_law_of_cosines_at_gap_pi():
    c = ConeSpec(0j, -math.pi)
    r = 1.5 ** (2 / 3)
    assert cone_distance(c, r, r * np.exp(1j * math.pi / 1.5)) == pytest.approx(2.0, abs=1e-14)


def test_cone_distance_through_vertex():
    # cone angle 3 pi, unfolded gap 3 pi / 2 > pi: the geodesic runs through the vertex
    c = ConeSpec(0j, -math.pi)
    z1, z2 = 1 + 0j, -1 + 0j
    assert cone_distance(c, z1, z2) == pytest.approx(4 / 3)
    g = cone_geodesic(c, z1, z2)
    assert np.min(np.abs(g)) < 1e-12


def test_cone_geodesic_length_matches_distance():
    c = ConeSpec(0j, -math.pi / 2)
    z1, z2 = 0.8 + 0.1j, -0.3 + 0.9j
    g = cone_geodesic(c, z1, z2, n=2000)
    L = polyline_length(cone_scene(c), Polyline(g))
    assert L == pytest.approx(cone_distance(c, z1, z2), rel=1e-5)


def test_cone_circle_length():
    for w0 in (-math.pi, 0.5, 3.0):
        assert cone_circle_length(ConeSpec(0j, w0), 1.0) == pytest.approx(TWO_PI)
    assert cone_circle_length(ConeSpec(0j, -math.pi), 2.0) == pytest.approx(TWO_PI * 2 ** 1.5)
    assert cone_circle_length(ConeSpec(0j, math.pi), 4.0) == pytest.approx(4 * math.pi)


def test_sector_angle():
    assert sector_angle(ConeSpec(0j, 0.0), 1.2) == 1.2
    assert sector_angle(ConeSpec(0j, math.pi), math.pi) == pytest.approx(math.pi / 2)
    assert sector_angle(ConeSpec(0j, -TWO_PI), math.pi) == pytest.approx(TWO_PI)


def test_curvature_factor_at_origin():
    assert curvature_factor("spherical", 0.0, 0j) == 4.0
    assert curvature_factor("hyperbolic", 0.0, 0j) == 4.0
    with pytest.raises(ValueError):
        curvature_factor("hyperbolic", 0.0, 2 + 0j)
    with pytest.raises(ValueError):
        curvature_factor("flat", 0.0, 0j)
