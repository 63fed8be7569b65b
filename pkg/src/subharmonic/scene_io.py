"""Strict JSON scene files with line-anchored error messages.

Schema::

    {
      "domain": {"center": [x, y], "radius": R},
      "measure": {
        "atoms": [{"pos": [x, y], "weight": w}, ...],
        "disc_densities": [{"center": [x, y], "radius": r, "total_mass": m}, ...],
        "circle_densities": [{"center": [x, y], "radius": r, "total_mass": m}, ...],
        "grid_density": {"origin": [x, y], "cell": h, "masses": [[...], ...]}
      },
      "harmonic": {"coeffs": [[re, im], ...]}
    }

Only ``domain`` is required. Unknown keys and non-finite numbers are rejected.
"""
from __future__ import annotations

import json
import json.decoder
import json.scanner
import math

import numpy as np

from .measure import Domain, GridDensity, HarmonicPoly, SignedMeasure
from .potential import MetricScene

__all__ = ["SceneError", "parse_scene", "loads_scene", "measure_to_dict", "scene_to_dict", "dump_scene"]


class SceneError(ValueError):
    pass


class _PosDict(dict):
    pos = 0
    end = 0


class _PosList(list):
    pos = 0


class _Decoder(json.JSONDecoder):
    """Pure-Python decoder that remembers where each object and array starts."""

    def __init__(self):
        super().__init__(object_pairs_hook=self._pairs, parse_constant=self._constant)
        self._parse_object_base = self.parse_object
        self._parse_array_base = self.parse_array
        self.parse_object = self._object
        self.parse_array = self._array
        self.scan_once = json.scanner.py_make_scanner(self)
        self.bad_constant = None

    @staticmethod
    def _pairs(pairs):
        d = _PosDict()
        for k, v in pairs:
            if k in d:
                raise SceneError(f"duplicate key {k!r}")
            d[k] = v
        return d

    def _constant(self, name):
        self.bad_constant = name
        raise ValueError(f"non-finite number {name}")

    def _object(self, s_and_end, *args):
        start = s_and_end[1] - 1
        obj, end = self._parse_object_base(s_and_end, *args)
        if isinstance(obj, _PosDict):
            obj.pos, obj.end = start, end
        return obj, end

    def _array(self, s_and_end, scan_once):
        start = s_and_end[1] - 1
        arr, end = self._parse_array_base(s_and_end, scan_once)
        out = _PosList(arr)
        out.pos = start
        return out, end


class _Ctx:
    def __init__(self, text: str, name: str):
        self.text = text
        self.name = name

    def line(self, pos: int) -> int:
        return self.text.count("\n", 0, pos) + 1

    def fail(self, node, msg: str, key=None):
        pos = getattr(node, "pos", 0)
        if key is not None and isinstance(node, _PosDict):
            k = self.text.find(json.dumps(key), node.pos, node.end)
            if k >= 0:
                pos = k
        raise SceneError(f"{self.name}:{self.line(pos)}: {msg}")


def _keys(ctx: _Ctx, node, allowed, required=(), where=""):
    if not isinstance(node, dict):
        ctx.fail(node, f"{where} must be an object")
    for k in node:
        if k not in allowed:
            ctx.fail(node, f"unknown key {k!r} in {where}", key=k)
    for k in required:
        if k not in node:
            ctx.fail(node, f"missing key {k!r} in {where}")


def _real(ctx: _Ctx, parent, key, positive=False):
    v = parent[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(parent, f"{key!r} must be a number", key=key)
    v = float(v)
    if not math.isfinite(v):
        ctx.fail(parent, f"{key!r} must be finite", key=key)
    if positive and not v > 0:
        ctx.fail(parent, f"{key!r} must be positive", key=key)
    return v


def _point(ctx: _Ctx, parent, key):
    v = parent[key]
    if not isinstance(v, list) or len(v) != 2:
        ctx.fail(parent, f"{key!r} must be a pair [x, y]", key=key)
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(float(x)):
            ctx.fail(parent, f"{key!r} must contain two finite numbers", key=key)
        out.append(float(x))
    return complex(out[0], out[1])


def _list(ctx: _Ctx, parent, key):
    v = parent.get(key, [])
    if not isinstance(v, list):
        ctx.fail(parent, f"{key!r} must be a list", key=key)
    return v


def _build(ctx: _Ctx, root) -> MetricScene:
    _keys(ctx, root, ("domain", "measure", "harmonic"), ("domain",), "scene")
    dom_node = root["domain"]
    _keys(ctx, dom_node, ("center", "radius"), ("center", "radius"), "domain")
    domain = Domain(_point(ctx, dom_node, "center"), _real(ctx, dom_node, "radius", positive=True))

    meas = root.get("measure", _PosDict())
    _keys(ctx, meas, ("atoms", "disc_densities", "circle_densities", "grid_density"), (), "measure")
    atoms = []
    for a in _list(ctx, meas, "atoms"):
        _keys(ctx, a, ("pos", "weight"), ("pos", "weight"), "atom")
        atoms.append((_point(ctx, a, "pos"), _real(ctx, a, "weight")))
    comps = {}
    for kind in ("disc_densities", "circle_densities"):
        comps[kind] = []
        for c in _list(ctx, meas, kind):
            _keys(ctx, c, ("center", "radius", "total_mass"), ("center", "radius", "total_mass"), kind)
            comps[kind].append((_point(ctx, c, "center"), _real(ctx, c, "radius", positive=True), _real(ctx, c, "total_mass")))
    grid = None
    if "grid_density" in meas:
        g = meas["grid_density"]
        _keys(ctx, g, ("origin", "cell", "masses"), ("origin", "cell", "masses"), "grid_density")
        rows = g["masses"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            ctx.fail(g, "'masses' must be a non-empty list of rows", key="masses")
        if len({len(r) for r in rows}) != 1 or not rows[0]:
            ctx.fail(g, "'masses' rows must have equal non-zero length", key="masses")
        try:
            arr = np.array(rows, dtype=float)
        except (TypeError, ValueError):
            ctx.fail(g, "'masses' must contain numbers", key="masses")
        if not np.all(np.isfinite(arr)):
            ctx.fail(g, "'masses' must be finite", key="masses")
        grid = GridDensity(_point(ctx, g, "origin"), _real(ctx, g, "cell", positive=True), arr)
    measure = SignedMeasure(tuple(atoms), tuple(comps["disc_densities"]), tuple(comps["circle_densities"]), grid)
    if not measure.support_inside(domain):
        ctx.fail(meas, "measure support lies outside the domain")

    harm = root.get("harmonic", _PosDict())
    _keys(ctx, harm, ("coeffs",), (), "harmonic")
    coeffs = []
    for c in _list(ctx, harm, "coeffs"):
        if not isinstance(c, list) or len(c) != 2 or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(float(x)) for x in c
        ):
            ctx.fail(harm, "each coefficient must be a finite pair [re, im]", key="coeffs")
        coeffs.append(complex(float(c[0]), float(c[1])))
    return MetricScene(domain, measure, HarmonicPoly(tuple(coeffs) if coeffs else (0j,)))


def loads_scene(text: str, name: str = "<scene>") -> MetricScene:
    dec = _Decoder()
    try:
        root, end = dec.raw_decode(text, json.decoder.WHITESPACE.match(text, 0).end())
    except json.JSONDecodeError as e:
        raise SceneError(f"{name}:{e.lineno}: {e.msg}") from None
    except SceneError as e:
        raise SceneError(f"{name}: {e}") from None
    except ValueError as e:
        pos = text.find(dec.bad_constant) if dec.bad_constant else 0
        raise SceneError(f"{name}:{text.count(chr(10), 0, max(pos, 0)) + 1}: {e}") from None
    if text[end:].strip():
        raise SceneError(f"{name}:{text.count(chr(10), 0, end) + 1}: trailing data after the scene object")
    ctx = _Ctx(text, name)
    try:
        return _build(ctx, root)
    except SceneError:
        raise
    except ValueError as e:
        raise SceneError(f"{name}: {e}") from None


def parse_scene(path) -> MetricScene:
    """Read and validate a scene file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return loads_scene(text, str(path))


def measure_to_dict(m: SignedMeasure) -> dict:
    out = {
        "atoms": [{"pos": [p.real, p.imag], "weight": w} for p, w in m.atoms],
        "disc_densities": [{"center": [c.real, c.imag], "radius": r, "total_mass": mm} for c, r, mm in m.disc_densities],
        "circle_densities": [{"center": [c.real, c.imag], "radius": r, "total_mass": mm} for c, r, mm in m.circle_densities],
    }
    if m.grid is not None:
        g = m.grid
        out["grid_density"] = {"origin": [g.origin.real, g.origin.imag], "cell": g.cell, "masses": g.masses.tolist()}
    return out


def scene_to_dict(scene: MetricScene) -> dict:
    """Plain-JSON representation of an underived scene (floats round-trip exactly)."""
    scene.require_base("scene serialization")
    return {
        "domain": {"center": [scene.domain.center.real, scene.domain.center.imag], "radius": scene.domain.radius},
        "measure": measure_to_dict(scene.measure),
        "harmonic": {"coeffs": [[complex(a).real, complex(a).imag] for a in scene.harmonic.coeffs]},
    }


def dump_scene(scene: MetricScene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2)
        fh.write("\n")
