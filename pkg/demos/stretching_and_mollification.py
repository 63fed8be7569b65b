"""Two limits at desk scale: canonical stretching and mollification.

Zooming into a point z0 and rescaling so that the small circle has length
2pi, the metric approaches the flat cone whose curvature is the mass of
z0. Separately, smoothing the curvature measure with a shrinking bump makes
distances converge. Both tables are printed and drawn as SVG curves.

    python3 demos/stretching_and_mollification.py [OUTDIR]

Takes a few minutes on one core.
"""
import math
import pathlib
import sys

from subharmonic import Domain, MetricScene, SignedMeasure, converge_experiment, potential_eval, mollify, stretch_experiment
from subharmonic.convergence import annulus_pairs
from subharmonic.svg import curves_svg, write_svg

out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

sc = MetricScene(Domain(0j, 3.0), SignedMeasure(atoms=((0j, 1.0),), disc_densities=((1.0 + 0j, 0.3, 2.0),)))
tab = stretch_experiment(sc, 0j, (0.4, 0.2, 0.1), n_pairs=8)
print("stretching at an atom of weight 1 next to a disc density")
for r, sup, mean in tab.rows:
    print(f"  r = {r:5.3f}  sup {sup:.4f}  mean {mean:.4f}")
write_svg(curves_svg([r[0] for r in tab.rows], {"sup": tab.sups()}, "r", "distance gap to the cone"), out / "stretch.svg")

# The mollified potential approaches p(omega) from above: circle means of a
# subharmonic function grow with the radius.
atom = SignedMeasure.atom(0j, 2 * math.pi)
print("\np(omega_h) at z = 0.05 for a 2pi atom, exact value", f"{float(potential_eval(0.05, atom)):.5f}")
for h in (0.4, 0.2, 0.1, 0.05):
    print(f"  h = {h:4.2f}: {float(potential_eval(0.05, mollify(atom, h))):.5f}")

signed = MetricScene(Domain(0j, 2.0), SignedMeasure(atoms=((0.3 + 0j, math.pi), (-0.3 + 0j, -math.pi))))
pairs = annulus_pairs(0.5, 8, seed=3, outer=1.2)
tab = converge_experiment(signed, (0.4, 0.2, 0.1), pairs)
print("\ndistances under mollification, atoms +pi and -pi")
for h, sup, mean in tab.rows:
    print(f"  h = {h:4.2f}  sup {sup:.4f}  mean {mean:.4f}")
write_svg(curves_svg([r[0] for r in tab.rows], {"sup": tab.sups()}, "h", "distance gap"), out / "converge.svg")
print(f"\ncurves written to {out}")
