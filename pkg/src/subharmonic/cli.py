"""Command-line front end.

Every subcommand prints one JSON object on standard output, or CSV with
``--csv``. Exit status: 0 on success, 1 on domain errors (invalid scene,
point at infinity, failed checks), 2 on usage errors. Non-finite numbers are
written as the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import cone as cone_mod
from .convergence import converge_experiment, stretch, stretch_factor
from .curves import (
    abs_rotation,
    alexandrov_bound_check,
    angular_function,
    angular_tv,
    circle_polygon,
    euclid_length,
    read_polyline,
    rotation,
)
from .metric import DistanceOptions, area, classify_point, distance, polyline_length
from .potential import localize, potential_eval
from .scene_io import SceneError, dump_scene, measure_to_dict, parse_scene
from .svg import curves_svg, heatmap_svg, write_svg
from .turn import comparison_excess, enclosed_mass, gauss_bonnet_defect, turns

__all__ = ["main", "run", "build_parser"]


class UsageError(Exception):
    pass


def _point(text: str) -> complex:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}") from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise argparse.ArgumentTypeError("coordinates must be finite")
    return complex(x, y)


def _floats(text: str):
    try:
        out = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers but got {text!r}") from None
    if not out or not all(math.isfinite(v) for v in out):
        raise argparse.ArgumentTypeError("expected finite numbers")
    return out


def _rect(text: str):
    v = _floats(text)
    if len(v) != 4:
        raise argparse.ArgumentTypeError("expected x0,y0,x1,y1")
    return tuple(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (complex, np.complexfloating)):
        return [_jsonable(float(v.real)), _jsonable(float(v.imag))]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def _emit(result: dict, as_csv: bool, out):
    result = _jsonable(result)
    if not as_csv:
        out.write(json.dumps(result) + "\n")
        return
    w = csv.writer(out, lineterminator="\n")
    rows = result.get("rows")
    if rows:
        header = list(rows[0].keys())
        w.writerow(header)
        for r in rows:
            w.writerow([r[k] for k in header])
        return
    scal = {k: v for k, v in result.items() if not isinstance(v, (list, dict))}
    w.writerow(list(scal.keys()))
    w.writerow(list(scal.values()))


def _pts_list(verts):
    return [[float(z.real), float(z.imag)] for z in np.asarray(verts, dtype=complex)]


# --------------------------------------------------------------------------
# subcommands


def cmd_eval(a):
    sc = parse_scene(a.scene)
    rows = []
    for z in a.at:
        rows.append(
            {
                "x": z.real,
                "y": z.imag,
                "potential": float(potential_eval(z, sc.measure)),
                "h": float(sc.harmonic(z)),
                "lambda": float(sc.lam(z)),
                "class": classify_point(sc, z),
            }
        )
    if a.what != "all":
        if len(rows) == 1:
            return {"value": rows[0][a.what]}
        rows = [{"x": r["x"], "y": r["y"], a.what: r[a.what]} for r in rows]
    return {"rows": rows}


def cmd_length(a):
    sc = parse_scene(a.scene)
    p = read_polyline(a.polyline)
    return {"length": polyline_length(sc, p), "euclid_length": euclid_length(p)}


def cmd_dist(a):
    sc = parse_scene(a.scene)
    opts = DistanceOptions(grid=a.grid, tol=a.tol, allow_infinite=a.allow_infinite)
    res = distance(sc, a.src, a.dst, opts)
    out = {"distance": res.value, "witness": [] if res.witness is None else _pts_list(res.witness.vertices)}
    if a.svg:
        wit = [] if res.witness is None else [res.witness.vertices]
        write_svg(heatmap_svg(sc, witnesses=wit), a.svg)
    return out


def cmd_area(a):
    sc = parse_scene(a.scene)
    return {"area": area(sc, a.rect, tol=a.tol)}


def cmd_curve(a):
    p = read_polyline(a.polyline)
    if a.op == "phi" or a.op == "tv":
        if a.zeta is None:
            raise UsageError(f"curve --op {a.op} needs --zeta")
    if a.op == "length":
        return {"value": euclid_length(p)}
    if a.op == "rotation":
        return {"value": rotation(p)}
    if a.op == "absrot":
        return {"value": abs_rotation(p)}
    if a.op == "phi":
        return {"value": angular_function(p, a.zeta)}
    if a.op == "tv":
        return {"value": angular_tv(p, a.zeta)}
    out = {
        "closed": p.closed,
        "vertices": len(p),
        "euclid_length": euclid_length(p),
        "rotation": rotation(p),
        "abs_rotation": abs_rotation(p),
    }
    if a.zeta is not None:
        out["angular_function"] = angular_function(p, a.zeta)
        out["angular_tv"] = angular_tv(p, a.zeta)
        out["radon_bound"] = out["abs_rotation"] + math.pi
    if not p.closed and out["abs_rotation"] < math.pi:
        out["alexandrov"] = alexandrov_bound_check(p)
    return out


def cmd_turn(a):
    sc = parse_scene(a.scene)
    p = read_polyline(a.polyline)
    kl, kr = turns(sc, p)
    out = {}
    if a.side in ("left", "both"):
        out["left_turn"] = kl
    if a.side in ("right", "both"):
        out["right_turn"] = kr
    if a.side == "both":
        out["sum"] = kl + kr
    return out


def cmd_gaussbonnet(a):
    sc = parse_scene(a.scene)
    p = read_polyline(a.polyline)
    if not p.closed:
        raise ValueError("gaussbonnet needs a closed polyline (# closed=true)")
    mass = enclosed_mass(sc.measure, p)
    defect = gauss_bonnet_defect(sc, p)
    return {"left_turn": defect - mass + 2 * math.pi, "enclosed_mass": mass, "defect": defect}


def cmd_excess(a):
    sc = parse_scene(a.scene)
    opts = DistanceOptions(grid=a.grid, tol=a.tol)

    def dist(z, w):
        return distance(sc, z, w, opts).value

    def geo(z, w):
        return distance(sc, z, w, opts).witness.vertices

    r = comparison_excess(sc, a.x, a.y1, a.y2, t_schedule=a.t, dist=dist, geodesic=geo, tol=a.slack)
    return {
        "alpha_bar_estimate": r.alpha_bar_estimate,
        "alpha0": r.alpha0,
        "excess_bound_holds": r.excess_bound_holds,
        "omega_plus_interior": r.omega_plus,
        "sequence": r.sequence,
        "t_schedule": r.t_schedule,
        "sides": list(r.sides),
    }


def cmd_cone(a):
    c = cone_mod.ConeSpec(a.vertex, a.omega0)
    out = {"omega0": c.omega0, "beta": c.beta, "alpha": c.alpha}
    if a.op == "dist":
        if a.src is None or a.dst is None:
            raise UsageError("cone --op dist needs --from and --to")
        out["distance"] = cone_mod.cone_distance(c, a.src, a.dst)
    elif a.op == "circle":
        if a.radius is None:
            raise UsageError("cone --op circle needs --radius")
        out["circle_length"] = cone_mod.cone_circle_length(c, a.radius)
    elif a.op == "sector":
        if a.theta is None:
            raise UsageError("cone --op sector needs --theta")
        out["sector_angle"] = cone_mod.sector_angle(c, a.theta)
    elif a.op == "coords":
        if a.src is None:
            raise UsageError("cone --op coords needs --from")
        rho, th = cone_mod.plane_to_cone(c, a.src)
        out["rho"], out["theta"] = rho, th
    return out


def cmd_localize(a):
    sc = parse_scene(a.scene)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = localize(sc, a.center, a.radius, n_segments=a.segments, tol=a.tol)
    return {
        "k": res.k,
        "residual": res.residual,
        "within_tolerance": res.residual <= a.tol,
        "measure": measure_to_dict(res.measure),
    }


def cmd_stretch(a):
    sc = parse_scene(a.scene)
    st = stretch(sc, a.center, a.radius)
    out = {
        "c": stretch_factor(sc, a.center, a.radius),
        "unit_circle_length": polyline_length(st, circle_polygon(0j, 1.0, 1024)),
    }
    if a.emit:
        dump_scene(st, a.emit)
        out["emitted"] = a.emit
    return out


def _read_pairs(path):
    pairs = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip() or row[0].strip().startswith("#"):
                continue
            if row[0].strip().lower() in ("x1", "ax"):
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected four columns x1,y1,x2,y2")
            try:
                v = [float(x) for x in row]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric coordinate") from None
            if not all(math.isfinite(x) for x in v):
                raise ValueError(f"{path}:{lineno}: non-finite coordinate")
            pairs.append((complex(v[0], v[1]), complex(v[2], v[3])))
    if not pairs:
        raise ValueError(f"{path}: no pairs")
    return pairs


def cmd_converge(a):
    sc = parse_scene(a.scene)
    pairs = _read_pairs(a.pairs)
    opts = DistanceOptions(grid=a.grid, tol=a.tol)
    tab = converge_experiment(sc, a.scales, pairs, opts=opts, grid_n=a.grid_n, threads=a.threads)
    rows = [{"h": h, "sup_discrepancy": s, "mean_discrepancy": m} for h, s, m in tab.rows]
    if a.svg:
        write_svg(
            curves_svg([r[0] for r in tab.rows], {"sup": tab.sups(), "mean": [r[2] for r in tab.rows]}, "h", "discrepancy"),
            a.svg,
        )
    return {"rows": rows, "decreasing": tab.decreasing}


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="subharmonic", description="Subharmonic metrics: lengths, distances, turns and convergence experiments.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, fn, help_, scene=True, csv_flag=True):
        p = sub.add_parser(name, help=help_)
        if scene:
            p.add_argument("--scene", required=True, help="scene JSON file")
        if csv_flag:
            p.add_argument("--csv", action="store_true", help="CSV instead of JSON")
        p.add_argument("--threads", type=int, default=1, help="worker threads for independent queries")
        p.set_defaults(func=fn)
        return p

    p = add("eval", cmd_eval, "potential, lambda and point class at points")
    p.add_argument("--at", "--point", dest="at", type=_point, action="append", required=True, metavar="X,Y")
    p.add_argument("--what", choices=("all", "lambda", "potential", "h", "class"), default="all")

    p = add("length", cmd_length, "lambda-length of a polyline")
    p.add_argument("--polyline", required=True)

    p = add("dist", cmd_dist, "subharmonic distance with a witness broken line")
    p.add_argument("--from", dest="src", type=_point, required=True, metavar="X,Y")
    p.add_argument("--to", dest="dst", type=_point, required=True, metavar="X,Y")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--allow-infinite", action="store_true")
    p.add_argument("--svg")

    p = add("area", cmd_area, "lambda-area of an axis-aligned rectangle")
    p.add_argument("--rect", type=_rect, required=True, metavar="X0,Y0,X1,Y1")
    p.add_argument("--tol", type=float, default=1e-8)

    p = add("curve", cmd_curve, "Euclidean rotation data of a polyline", scene=False)
    p.add_argument("--polyline", "--file", dest="polyline", required=True)
    p.add_argument("--op", choices=("all", "length", "rotation", "absrot", "phi", "tv"), default="all")
    p.add_argument("--zeta", type=_point, metavar="X,Y")

    p = add("turn", cmd_turn, "left and right turns of an open polyline")
    p.add_argument("--polyline", required=True)
    p.add_argument("--side", choices=("left", "right", "both"), default="both")

    p = add("gaussbonnet", cmd_gaussbonnet, "Gauss-Bonnet audit of a closed polyline")
    p.add_argument("--polyline", required=True)

    p = add("excess", cmd_excess, "upper angle against comparison angle at a triangle vertex")
    p.add_argument("--x", type=_point, required=True, metavar="X,Y")
    p.add_argument("--y1", type=_point, required=True, metavar="X,Y")
    p.add_argument("--y2", type=_point, required=True, metavar="X,Y")
    p.add_argument("--t", type=_floats, default=[0.2, 0.1, 0.05, 0.025])
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--slack", type=float, default=0.02)

    p = add("cone", cmd_cone, "closed-form flat cone geometry", scene=False)
    p.add_argument("--omega0", type=float, required=True)
    p.add_argument("--op", choices=("dist", "circle", "sector", "coords"), required=True)
    p.add_argument("--vertex", type=_point, default=0j, metavar="X,Y")
    p.add_argument("--from", dest="src", type=_point, metavar="X,Y")
    p.add_argument("--to", dest="dst", type=_point, metavar="X,Y")
    p.add_argument("--radius", type=float)
    p.add_argument("--theta", type=float)

    p = add("localize", cmd_localize, "localized measure on a disc")
    p.add_argument("--center", type=_point, required=True, metavar="X,Y")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--segments", type=int, default=512)
    p.add_argument("--tol", type=float, default=1e-4)

    p = add("stretch", cmd_stretch, "canonical stretching of a scene")
    p.add_argument("--center", type=_point, required=True, metavar="X,Y")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--emit", help="write the stretched scene to this JSON file")

    p = add("converge", cmd_converge, "distance convergence under mollification", csv_flag=False)
    p.add_argument("--scales", type=_floats, required=True)
    p.add_argument("--pairs", required=True, help="CSV of x1,y1,x2,y2 rows")
    p.add_argument("--csv", nargs="?", const="-", default=None, metavar="OUT", help="CSV to OUT (or standard output)")
    p.add_argument("--svg")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--grid-n", type=int, default=48)
    p.add_argument("--tol", type=float, default=1e-4)
    return ap


def run(argv, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except UsageError as e:
        stderr.write(f"{e}\n")
        return 2
    except SystemExit as e:  # --help
        return int(e.code or 0)
    if getattr(args, "threads", 1) < 1:
        stderr.write("--threads must be at least 1\n")
        return 2
    try:
        result = args.func(args)
    except UsageError as e:
        stderr.write(f"{e}\n")
        return 2
    except (SceneError, ValueError, RuntimeError, OSError, ZeroDivisionError) as e:
        stderr.write(json.dumps({"error": str(e)}) + "\n")
        return 1
    if args.command == "converge" and args.csv not in (None, "-"):
        buf = io.StringIO()
        _emit(result, True, buf)
        with open(args.csv, "w", newline="") as fh:
            fh.write(buf.getvalue())
        _emit(result, False, stdout)
    else:
        as_csv = args.csv is not None and args.csv is not False
        _emit(result, bool(as_csv), stdout)
    return 0


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
