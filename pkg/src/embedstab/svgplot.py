"""Dependency-free SVG emission for line charts and scatter plots.

Output is deterministic: fixed canvas geometry and 9-significant-digit
coordinates, so identical inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .serialize import fmt_float

_W, _H = 640, 420
_MARGIN = 60


def _scale(vals, lo_px, hi_px):
    vmin, vmax = min(vals), max(vals)
    if vmax == vmin:
        vmin, vmax = vmin - 1.0, vmax + 1.0
    span = vmax - vmin

    def to_px(v):
        return lo_px + (v - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def _header(title: str) -> list[str]:
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
    ]
    return parts


def _axes(xlabel: str, ylabel: str, xmin, xmax, ymin, ymax) -> list[str]:
    x0, x1 = _MARGIN, _W - _MARGIN
    y0, y1 = _H - _MARGIN, _MARGIN
    parts = [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) // 2}" y="{_H - 16}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="18" y="{(y0 + y1) // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {(y0 + y1) // 2})">{escape(ylabel)}</text>',
        f'<text x="{x0}" y="{y0 + 16}" text-anchor="middle" font-size="10">{fmt_float(xmin)}</text>',
        f'<text x="{x1}" y="{y0 + 16}" text-anchor="middle" font-size="10">{fmt_float(xmax)}</text>',
        f'<text x="{x0 - 6}" y="{y0 + 4}" text-anchor="end" font-size="10">{fmt_float(ymin)}</text>',
        f'<text x="{x0 - 6}" y="{y1 + 4}" text-anchor="end" font-size="10">{fmt_float(ymax)}</text>',
    ]
    return parts


def line_chart(
    xs,
    ys,
    marked_x=None,
    title: str = "",
    xlabel: str = "x",
    ylabel: str = "y",
) -> str:
    """Polyline chart with circled points; ``marked_x`` highlights one x value."""
    xs, ys = [float(v) for v in xs], [float(v) for v in ys]
    to_x, xmin, xmax = _scale(xs, _MARGIN, _W - _MARGIN)
    to_y, ymin, ymax = _scale(ys, _H - _MARGIN, _MARGIN)
    parts = _header(title) + _axes(xlabel, ylabel, xmin, xmax, ymin, ymax)
    pts = " ".join(f"{fmt_float(to_x(x))},{fmt_float(to_y(y))}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
    for x, y in zip(xs, ys):
        fill = "crimson" if marked_x is not None and x == float(marked_x) else "steelblue"
        r = 6 if fill == "crimson" else 4
        parts.append(
            f'<circle cx="{fmt_float(to_x(x))}" cy="{fmt_float(to_y(y))}" r="{r}" fill="{fill}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter(points, values=None, title: str = "", xlabel: str = "dim1", ylabel: str = "dim2") -> str:
    """Scatter plot; optional per-point values shade markers light-to-dark blue."""
    xs = [float(p[0]) for p in points]
    ys = [float(p[1]) for p in points]
    to_x, xmin, xmax = _scale(xs, _MARGIN, _W - _MARGIN)
    to_y, ymin, ymax = _scale(ys, _H - _MARGIN, _MARGIN)
    parts = _header(title) + _axes(xlabel, ylabel, xmin, xmax, ymin, ymax)
    if values is not None:
        vals = [float(v) for v in values]
        vmin, vmax = min(vals), max(vals)
        span = (vmax - vmin) or 1.0
        shades = [int(40 + 180 * (v - vmin) / span) for v in vals]
    else:
        shades = [120] * len(xs)
    for x, y, s in zip(xs, ys, shades):
        parts.append(
            f'<circle cx="{fmt_float(to_x(x))}" cy="{fmt_float(to_y(y))}" r="2.5" '
            f'fill="rgb(30,60,{s})" fill-opacity="0.8"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_svg(path: str | Path, content: str) -> None:
    Path(path).write_text(content)
