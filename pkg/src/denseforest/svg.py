"""Minimal SVG writers for planar point clouds and log-log curves."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import SpecError
from .forest import PointCloud
from .lattice import Window

COLOURS = ("#1f4e79", "#c0392b", "#27ae60", "#8e44ad", "#d68910", "#17a589")


def _header(x0: float, y0: float, w: float, h: float, px: int = 800) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{px}" height="{px}" '
            f'viewBox="{x0:.6g} {y0:.6g} {w:.6g} {h:.6g}">\n')


def emit_scatter_svg(P: PointCloud, path, window: Window | None = None, radius: float | None = None) -> Path:
    """One filled circle per point, coloured by provenance label when present; the y axis
    points up."""
    if P.dim != 2:
        raise SpecError(f"scatter plots need d = 2, got d = {P.dim}")
    pts = np.asarray(P.points, dtype=float).reshape(-1, 2)
    if window is not None:
        lo, hi = window.center - window.radius, window.center + window.radius
    elif len(pts):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    span = float(max(hi - lo)) or 1.0
    r = radius if radius is not None else span / 300
    labels = P.provenance.get("segment_index") or P.provenance.get("labels")
    labels = np.asarray(labels, dtype=int) if labels is not None and len(labels) == len(pts) else np.zeros(len(pts), int)
    pad = 3 * r
    lines = [_header(lo[0] - pad, -hi[1] - pad, hi[0] - lo[0] + 2 * pad, hi[1] - lo[1] + 2 * pad)]
    lines.append(f'<rect x="{lo[0] - pad:.6g}" y="{-hi[1] - pad:.6g}" width="{hi[0] - lo[0] + 2 * pad:.6g}" '
                 f'height="{hi[1] - lo[1] + 2 * pad:.6g}" fill="white"/>\n')
    for (x, y), lab in zip(pts, labels):
        lines.append(f'<circle cx="{x:.6g}" cy="{-y:.6g}" r="{r:.3g}" fill="{COLOURS[lab % len(COLOURS)]}"/>\n')
    lines.append("</svg>\n")
    path = Path(path)
    path.write_text("".join(lines))
    return path


def emit_curve_svg(epsilons, lengths, path, slope: float | None = None) -> Path:
    """log(length) against log(1/eps) with a fitted line when a slope is given."""
    xs = [math.log(1 / e) for e in epsilons]
    ys = [math.log(l) if l > 0 else float("nan") for l in lengths]
    finite = [(x, y) for x, y in zip(xs, ys) if not math.isnan(y)]
    size, m = 400.0, 40.0
    if not finite:
        finite = [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in finite), max(p[0] for p in finite)
    y0, y1 = min(p[1] for p in finite), max(p[1] for p in finite)
    sx = (size - 2 * m) / ((x1 - x0) or 1.0)
    sy = (size - 2 * m) / ((y1 - y0) or 1.0)

    def px(x, y):
        return m + (x - x0) * sx, size - m - (y - y0) * sy

    out = [_header(0, 0, size, size, int(size)), f'<rect width="{size}" height="{size}" fill="white"/>\n',
           f'<line x1="{m}" y1="{size - m}" x2="{size - m}" y2="{size - m}" stroke="black"/>\n',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{size - m}" stroke="black"/>\n',
           f'<text x="{size / 2}" y="{size - 8}" font-size="12" text-anchor="middle">log(1/eps)</text>\n',
           f'<text x="12" y="{size / 2}" font-size="12" transform="rotate(-90 12 {size / 2})" '
           f'text-anchor="middle">log(max empty length)</text>\n']
    pts = [px(x, y) for x, y in finite]
    out.append('<polyline fill="none" stroke="#1f4e79" points="' +
               " ".join(f"{a:.2f},{b:.2f}" for a, b in pts) + '"/>\n')
    for a, b in pts:
        out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="#1f4e79"/>\n')
    if slope is not None and not math.isnan(slope):
        out.append(f'<text x="{m + 10}" y="{m}" font-size="12">slope {slope:.3f}</text>\n')
    out.append("</svg>\n")
    path = Path(path)
    path.write_text("".join(out))
    return path
