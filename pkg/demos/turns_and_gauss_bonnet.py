"""Turns of broken lines and the Gauss-Bonnet identity.

The left turn of a closed positively oriented polyline plus the curvature
mass it encloses equals 2pi. Atoms, disc and circle densities, grid
densities and a harmonic term all enter the left turn; the identity is
checked to rounding error for each kind.

    python3 demos/turns_and_gauss_bonnet.py
"""
import math

import numpy as np

from subharmonic import (
    Domain,
    HarmonicPoly,
    MetricScene,
    Polyline,
    SignedMeasure,
    angular_function,
    enclosed_mass,
    gauss_bonnet_defect,
    left_turn,
    mollify,
    right_turn,
    rotation,
)

pent = Polyline([-0.9 - 0.8j, 1.1 - 0.5j, 1.2 + 0.9j, 0.1 + 1.3j, -1.0 + 0.6j], closed=True)
scenes = {
    "atoms": SignedMeasure(atoms=((0.1 + 0.2j, 1.0), (-0.4 - 0.3j, -0.6), (2 + 0j, 3.0))),
    "disc + circle": SignedMeasure(disc_densities=((0.8 + 0j, 0.6, 1.3),), circle_densities=((-0.2 + 0j, 0.9, -0.7),)),
    "mollified atoms": mollify(SignedMeasure(atoms=((0.2 + 0j, 1.0), (-0.3 + 0.2j, -0.5))), 0.3, grid_n=32),
}
h = HarmonicPoly((0j, 0.3 - 0.2j, 0.1j))
for name, m in scenes.items():
    sc = MetricScene(Domain(0j, 3.0), m, h)
    kl = left_turn(sc, pent)
    mass = enclosed_mass(m, pent)
    print(f"{name:16s} left turn {kl:+.6f}  enclosed {mass:+.6f}  defect {gauss_bonnet_defect(sc, pent):+.1e}")

# An atom sitting on an open arc: the left and right turns share its weight.
arc = Polyline([-1, -0.2j, 1])
sc = MetricScene(Domain(0j, 3.0), SignedMeasure.atom(-0.2j, 0.8))
kl, kr = left_turn(sc, arc), right_turn(sc, arc)
print(f"\natom 0.8 on the arc: left {kl:.6f} + right {kr:.6f} = {kl + kr:.6f}")

# On a flat cone the left turn of an arc is its Euclidean rotation corrected
# by beta times the angle under which the vertex sees it.
arc = Polyline(1 + 0.5 * np.exp(1j * np.linspace(-1, 1.5, 200)))
sc = MetricScene(Domain(0j, 3.0), SignedMeasure.atom(0j, 1.0))
beta = -1 / (2 * math.pi)
predicted = rotation(arc) + beta * angular_function(arc, 0j)
print(f"arc near a cone vertex: left turn {left_turn(sc, arc):.6f}, rotation + beta phi = {predicted:.6f}")
