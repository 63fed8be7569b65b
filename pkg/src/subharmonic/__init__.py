"""Numerical toolkit for subharmonic metrics ``lambda |dz|^2`` on plane domains.

``lambda = exp(-2 (p(omega) + h))`` where ``p(omega)`` is the logarithmic
potential of a compactly supported signed measure and ``h`` a harmonic
polynomial.
"""
from .cone import (
    ConeSpec,
    cone_circle_length,
    cone_distance,
    cone_geodesic,
    cone_scene,
    curvature_factor,
    plane_to_cone,
    sector_angle,
)
from .convergence import converge_experiment, stretch, stretch_experiment, stretch_factor
from .curves import (
    Polyline,
    abs_rotation,
    alexandrov_bound_check,
    angular_function,
    angular_tv,
    circle_polygon,
    euclid_length,
    left_right_angles,
    read_polyline,
    rotation,
    write_polyline,
)
from .measure import (
    Domain,
    GridDensity,
    HarmonicPoly,
    SignedMeasure,
    jordan_parts,
    mass_in_disc,
    restrict_to_disc,
    total_variation,
)
from .metric import (
    DistanceOptions,
    DistanceSolver,
    area,
    classify_point,
    distance,
    polyline_length,
    pullback,
    segment_length,
)
from .potential import (
    MetricScene,
    conjugate_diff,
    grad_potential,
    lambda_eval,
    localize,
    mollify,
    potential_eval,
    weak_laplacian_residual,
)
from .scene_io import dump_scene, parse_scene
from .turn import (
    comparison_excess,
    enclosed_mass,
    gauss_bonnet_defect,
    left_turn,
    right_turn,
    subharmonic_angle,
)

__version__ = "0.1.0"
