import math

import numpy as np
import pytest

from subharmonic import (
    ConeSpec,
    DistanceOptions,
    DistanceSolver,
    Domain,
    HarmonicPoly,
    MetricScene,
    Polyline,
    SignedMeasure,
    area,
    circle_polygon,
    classify_point,
    cone_distance,
    cone_scene,
    distance,
    polyline_length,
    pullback,
    segment_length,
)

TWO_PI = 2 * math.pi


def cone(w0, radius=2.0):
    return MetricScene(Domain(0j, radius), SignedMeasure.atom(0j, w0))


def test_segment_length_flat():
    assert segment_length(MetricScene(Domain(0j, 10.0)), 0j, 3 + 4j) == pytest.approx(5.0, rel=1e-14)


def test_segment_length_from_cone_vertex():
    assert segment_length(cone(math.pi), 0j, 1 + 0j) == pytest.approx(2.0, abs=1e-6)


def test_segment_length_into_infinite_point():
    assert segment_length(cone(TWO_PI), 0j, 1 + 0j) == math.inf


def test_segment_length_rejects_points_outside_domain():
    with pytest.raises(ValueError):
        segment_length(cone(1.0), 0j, 3 + 0j)


@pytest.mark.parametrize("w0", [-math.pi, 1.0, math.pi, 1.5 * math.pi])
def test_unit_circle_length_is_two_pi(w0):
    assert polyline_length(cone(w0), circle_polygon(0j, 1.0, 1024)) == pytest.approx(TWO_PI, rel=1e-3)


def test_circle_length_positive_beta():
    # beta = 0.5 means omega0 = -pi
    L = polyline_length(cone(-math.pi, 3.0), circle_polygon(0j, 2.0, 1024))
    assert L == pytest.approx(TWO_PI * 2 ** 1.5, rel=1e-3)


def test_spiral_length_in_quadratic_metric():
    # lambda = |z|^2 along theta = 1/r - pi: the arc element is sqrt(1 + r^2) dr
    sc = cone(-TWO_PI)
    r0 = 0.05

    def F(r):
        return 0.5 * (r * math.sqrt(1 + r * r) + math.asinh(r))

    lengths = []
    for n in (2000, 4000):
        th = np.linspace(0.0, 1 / r0 - math.pi, n + 1)
        r = 1 / (th + math.pi)
        lengths.append(polyline_length(sc, Polyline(r * np.exp(1j * th))))
    extrapolated = (4 * lengths[1] - lengths[0]) / 3
    assert extrapolated == pytest.approx(F(1 / math.pi) - F(r0), rel=1e-7)


def test_distance_flat():
    res = distance(MetricScene(Domain(0j, 10.0)), 0j, 3 + 4j)
    assert res.value == pytest.approx(5.0, rel=1e-3)
    assert res.witness.vertices[0] == 0j and res.witness.vertices[-1] == 3 + 4j


@pytest.mark.parametrize("z", [0.5 + 0j, 0.5 * np.exp(2j), 1 + 0j])
def test_distance_from_cone_vertex(z):
    r = abs(z)
    assert distance(cone(math.pi), 0j, z).value == pytest.approx(2 * math.sqrt(r), rel=5e-3)


def test_distance_across_negative_cone():
    c = ConeSpec(0j, -math.pi)
    r = 1.5 ** (2 / 3)
    z1, z2 = r + 0j, r * np.exp(1j * math.pi / 1.5)
    assert cone_distance(c, z1, z2) == pytest.approx(2.0, abs=1e-14)
    assert distance(cone_scene(c), z1, z2).value == pytest.approx(2.0, rel=5e-3)


def test_distance_to_infinite_point():
    sc = cone(TWO_PI)
    with pytest.raises(ValueError):
        distance(sc, 0j, 1 + 0j)
    assert distance(sc, 0j, 1 + 0j, DistanceOptions(allow_infinite=True)).value == math.inf


def test_solver_is_deterministic():
    sc = MetricScene(Domain(0j, 2.0), SignedMeasure(atoms=((0.2j, 1.0), (0.5 + 0j, -1.0))))
    s = DistanceSolver(sc)
    a = s.query(-0.8 + 0.1j, 0.9 - 0.2j)
    b = DistanceSolver(sc).query(-0.8 + 0.1j, 0.9 - 0.2j)
    assert a.value == b.value
    assert np.array_equal(a.witness.vertices, b.witness.vertices)


def test_area_examples():
    assert area(MetricScene(Domain(0j, 3.0)), (0, 0, 1, 1)) == pytest.approx(1.0, rel=1e-12)
    w0 = 1.0
    beta = -w0 / TWO_PI
    assert area(cone(w0), ("disc", 0j, 1.0)) == pytest.approx(math.pi / (1 + beta), rel=1e-8)


def test_area_invariant_under_affine_pullback():
    src = MetricScene(Domain(0j, 3.0), SignedMeasure.atom(0.4 + 0j, 1.0), HarmonicPoly((0j, 0.2 + 0j)))
    pb = pullback(src, (0.5 + 0j, 1.5 + 0j), Domain(0j, 1.2))
    a_pb = area(pb, (-0.5, -0.5, 0.5, 0.5))
    a_src = area(src, (-0.25, -0.75, 1.25, 0.75))
    assert a_pb == pytest.approx(a_src, rel=1e-4)


def test_pullback_similarity():
    pb = pullback(MetricScene(Domain(0j, 3.0)), (1 + 0j, 2 + 0j), Domain(0j, 1.0))
    assert pb.lam(0.3 + 0.1j) == pytest.approx(4.0)
    assert distance(pb, 0j, 0.5j).value == pytest.approx(1.0, rel=1e-3)


def test_pullback_squaring_on_half_disc():
    src = MetricScene(Domain(1 + 0j, 2.6))
    pb = pullback(src, (0j, 0j, 1 + 0j), Domain(1 + 0j, 0.8))
    opts = DistanceOptions(region=(1 + 0j, 1.5))
    a, b = 0.8 + 0.3j, 1.3 - 0.2j
    d_pb = distance(pb, a, b).value
    d_src = distance(src, a * a, b * b, opts).value
    assert d_pb == pytest.approx(d_src, rel=2e-4)


def test_pullback_rejects_non_injective_map():
    with pytest.raises(ValueError):
        pullback(MetricScene(Domain(0j, 5.0)), (0j, 0j, 1 + 0j), Domain(0j, 1.0))


def test_classify_point():
    assert classify_point(cone(3 * math.pi, 4.0), 0j) == "infinity"
    assert classify_point(cone(TWO_PI), 0j) == "infinity"
    signed = MetricScene(
        Domain(0j, 2.0), SignedMeasure(atoms=((0j, TWO_PI),), circle_densities=((0j, 0.5, -1.0),))
    )
    assert classify_point(signed, 0j) == "ambiguous"
    assert classify_point(cone(1.0), 0j) == "finite"
