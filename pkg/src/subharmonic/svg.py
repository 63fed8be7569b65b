"""Standalone SVG 1.1 output: lambda heatmaps, witness overlays, convergence curves."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .potential import MetricScene

__all__ = ["heatmap_svg", "curves_svg", "write_svg"]

# a short perceptual ramp (dark blue -> teal -> yellow)
_RAMP = np.array(
    [
        [68, 1, 84],
        [59, 82, 139],
        [33, 145, 140],
        [94, 201, 98],
        [253, 231, 37],
    ],
    dtype=float,
)


def _color(t: float) -> str:
    t = min(1.0, max(0.0, t)) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    f = t - i
    r, g, b = (1 - f) * _RAMP[i] + f * _RAMP[i + 1]
    return f"#{int(round(r)):02x}{int(round(g)):02x}{int(round(b)):02x}"


def heatmap_svg(
    scene: MetricScene,
    n: int = 96,
    witnesses: Sequence = (),
    curves: Sequence = (),
    size: int = 480,
    box: Optional[tuple] = None,
) -> str:
    """Heatmap of ``log10 lambda`` over ``box`` (default: the domain's bounding square).

    ``witnesses`` and ``curves`` are arrays of complex points drawn on top;
    atoms are marked, with points at infinity drawn as red crosses.
    """
    if box is None:
        c, R = scene.domain.center, scene.domain.radius
        box = (c.real - R, c.imag - R, c.real + R, c.imag + R)
    x0, y0, x1, y1 = map(float, box)
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    Z = xs[None, :] + 1j * ys[:, None]
    with np.errstate(all="ignore"):
        L = 2 * scene.log_sqrt_lambda(Z.ravel()).reshape(Z.shape) / math.log(10)
    inside = np.asarray(scene.domain.contains(Z))
    finite = np.isfinite(L) & inside
    lo, hi = (np.percentile(L[finite], [2, 98]) if np.any(finite) else (0.0, 1.0))
    if hi <= lo:
        hi = lo + 1.0
    sx = size / (x1 - x0)
    sy = size / (y1 - y0)

    def px(z):
        return (z.real - x0) * sx, (y1 - z.imag) * sy

    cw, ch = size / n, size / n
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size + 30}" viewBox="0 0 {size} {size + 30}">',
        f'<rect x="0" y="0" width="{size}" height="{size + 30}" fill="white"/>',
    ]
    for iy in range(n):
        for ix in range(n):
            if not inside[iy, ix]:
                continue
            v = L[iy, ix]
            col = _color((v - lo) / (hi - lo)) if np.isfinite(v) else ("#ffffff" if v > 0 else "#000000")
            out.append(f'<rect x="{ix * cw:.2f}" y="{size - (iy + 1) * ch:.2f}" width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" fill="{col}"/>')
    for pts in list(witnesses) + list(curves):
        pts = np.asarray(pts, dtype=complex)
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in (px(z) for z in pts))
        out.append(f'<polyline points="{coords}" fill="none" stroke="#e6194b" stroke-width="2"/>')
    for p, w in scene.singularities():
        a, b = px(p)
        if w >= 2 * math.pi:
            out.append(f'<path d="M{a - 5:.2f},{b - 5:.2f} L{a + 5:.2f},{b + 5:.2f} M{a - 5:.2f},{b + 5:.2f} L{a + 5:.2f},{b - 5:.2f}" stroke="red" stroke-width="2"/>')
        else:
            fill = "white" if w > 0 else "black"
            out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="4" fill="{fill}" stroke="black"/>')
    out.append(f'<text x="6" y="{size + 20}" font-family="sans-serif" font-size="12">log10 lambda in [{lo:.3g}, {hi:.3g}]</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def curves_svg(x, series: dict, xlabel: str = "", ylabel: str = "", size=(480, 320), logy: bool = True) -> str:
    """Line plot of one or more series against ``x`` (log-scaled y by default)."""
    W, H = size
    ml, mr, mt, mb = 60, 20, 20, 40
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    allv = np.concatenate(list(ys.values()))
    if logy:
        allv = allv[allv > 0]
        f = np.log10
    else:
        def f(v):
            return v
    ylo, yhi = (float(np.min(f(allv))), float(np.max(f(allv)))) if allv.size else (0.0, 1.0)
    if yhi <= ylo:
        yhi = ylo + 1.0
    xlo, xhi = float(np.min(x)), float(np.max(x))
    if xhi <= xlo:
        xhi = xlo + 1.0

    def px(a, b):
        return ml + (a - xlo) / (xhi - xlo) * (W - ml - mr), mt + (yhi - b) / (yhi - ylo) * (H - mt - mb)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{ml}" y1="{H - mb}" x2="{W - mr}" y2="{H - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{H - mb}" stroke="black"/>',
    ]
    for xv in x:
        a, _ = px(xv, ylo)
        out.append(f'<text x="{a:.1f}" y="{H - mb + 15}" font-family="sans-serif" font-size="10" text-anchor="middle">{xv:.3g}</text>')
    for yv in (ylo, yhi):
        _, b = px(xlo, yv)
        lab = f"{10 ** yv:.2g}" if logy else f"{yv:.3g}"
        out.append(f'<text x="{ml - 4}" y="{b + 4:.1f}" font-family="sans-serif" font-size="10" text-anchor="end">{lab}</text>')
    for k, (name, v) in enumerate(ys.items()):
        ok = v > 0 if logy else np.isfinite(v)
        pts = [px(a, b) for a, b in zip(x[ok], f(v[ok]))]
        col = colors[k % len(colors)]
        out.append(f'<polyline points="{" ".join(f"{a:.1f},{b:.1f}" for a, b in pts)}" fill="none" stroke="{col}" stroke-width="2"/>')
        for a, b in pts:
            out.append(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="3" fill="{col}"/>')
        out.append(f'<text x="{W - mr - 4}" y="{mt + 14 * (k + 1)}" font-family="sans-serif" font-size="11" text-anchor="end" fill="{col}">{escape(name)}</text>')
    out.append(f'<text x="{(W + ml) / 2}" y="{H - 6}" font-family="sans-serif" font-size="11" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="12" y="{mt - 6}" font-family="sans-serif" font-size="11">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(text: str, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
