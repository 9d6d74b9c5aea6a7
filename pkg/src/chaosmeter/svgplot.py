"""Minimal static SVG log-log plots, no plotting dependency."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=80, right=30, top=50, bottom=60)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def loglog_svg(series: dict, title: str = "", xlabel: str = "", ylabel: str = "", fit=None, note: str = "") -> str:
    """Render ``{label: (x, y)}`` on log-log axes.

    ``fit`` is an optional ``(slope, intercept)`` of ``log y = slope log x + intercept``
    drawn as a dashed line over the x-range of the first series.
    """
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    lx0, lx1 = math.floor(np.log10(xs.min())), math.ceil(np.log10(xs.max()))
    ly0, ly1 = math.floor(np.log10(ys.min())), math.ceil(np.log10(ys.max()))
    lx1 = max(lx1, lx0 + 1)
    ly1 = max(ly1, ly0 + 1)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (math.log10(x) - lx0) / (lx1 - lx0) * pw

    def py(y):
        return MARGIN["top"] + (ly1 - math.log10(y)) / (ly1 - ly0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(lx0, lx1 + 1):
        x = px(10.0**e)
        out.append(f'<line x1="{_fmt(x)}" y1="{MARGIN["top"] + ph}" x2="{_fmt(x)}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{MARGIN["top"] + ph + 20}" text-anchor="middle">1e{e}</text>')
    for e in range(ly0, ly1 + 1):
        y = py(10.0**e)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{_fmt(y)}" x2="{MARGIN["left"]}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{_fmt(y + 4)}" text-anchor="end">1e{e}</text>')
    for i, (label, (x, y)) in enumerate(series.items()):
        c = colors[i % len(colors)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="2"/>')
        for a, b in zip(x, y):
            out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="3" fill="{c}"/>')
        out.append(
            f'<text x="{MARGIN["left"] + 10}" y="{MARGIN["top"] + 18 + 16 * i}" fill="{c}">{escape(label)}</text>'
        )
    if fit is not None:
        slope, icpt = fit
        x0, x1 = (np.min(next(iter(series.values()))[0]), np.max(next(iter(series.values()))[0]))
        y0, y1 = math.exp(icpt) * x0**slope, math.exp(icpt) * x1**slope
        out.append(
            f'<line x1="{_fmt(px(x0))}" y1="{_fmt(py(y0))}" x2="{_fmt(px(x1))}" y2="{_fmt(py(y1))}" '
            'stroke="gray" stroke-dasharray="6,4"/>'
        )
    if note:
        out.append(f'<text x="{MARGIN["left"] + pw - 10}" y="{MARGIN["top"] + ph - 12}" text-anchor="end">{escape(note)}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="28" text-anchor="middle" font-size="15">{escape(title)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
