"""Static SVG log-log plots of sweep results. No plotting dependencies.

One polyline per series on log10/log10 axes, a dashed fitted line where a
rate fit exists, and a legend keyed by method.  Output is self-contained
SVG 1.1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .harness import SweepResult, fit_rate, group_rows

__all__ = ["PlotSeries", "emit_svg"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_WIDTH, _HEIGHT = 640, 480
_LEFT, _RIGHT, _TOP, _BOTTOM = 72, 24, 24, 56


@dataclass(frozen=True)
class PlotSeries:
    """One curve: a label, (N, mean excess) points, optional fitted line."""

    label: str
    points: tuple
    slope: float | None = None
    intercept: float | None = None


def _series_from(results) -> list[PlotSeries]:
    """Normalize SweepResults or parsed CSV rows into plot series."""
    results = list(results)
    if results and isinstance(results[0], SweepResult):
        labels = {r.method for r in results}
        out = []
        for r in results:
            label = r.method if len(labels) == len(results) else f"{r.method} {r.world_name}"
            out.append(
                PlotSeries(label, tuple(r.points()), r.slope, r.intercept)
            )
        return out
    if results and isinstance(results[0], PlotSeries):
        return results
    # CSV rows: one series per (method, world) group, refit where possible
    out = []
    groups = group_rows(results)
    methods = {method for method, _ in groups}
    for (method, world), rows in groups.items():
        label = method if len(methods) == len(groups) else f"{method} {world}"
        pts = tuple((row.N, row.mean_excess) for row in rows)
        positive = [(n, m) for n, m in pts if m > 0]
        slope = intercept = None
        if len(positive) >= 3:
            slope, _, intercept = fit_rate(positive)
        out.append(PlotSeries(label, pts, slope, intercept))
    return out


def _ticks(lo: float, hi: float) -> list[float]:
    """Ticks at multiples of 0.5 (or 1) in log10 units, at most ~8 of them."""
    step = 0.5 if hi - lo <= 4.0 else 1.0
    first = math.ceil(lo / step)
    return [round(i * step, 10) for i in range(first, math.floor(hi / step) + 1)]


def emit_svg(results, path: str) -> None:
    """Render sweep results (or CSV rows) to an SVG file at ``path``."""
    series = _series_from(results)
    if not series:
        raise ValueError("nothing to plot")
    log_pts = [
        [(math.log10(n), math.log10(m)) for n, m in s.points if m > 0] for s in series
    ]
    xs = [p[0] for pts in log_pts for p in pts]
    ys = [p[1] for pts in log_pts for p in pts]
    if xs:
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
    else:
        x_lo, x_hi, y_lo, y_hi = 0.0, 1.0, 0.0, 1.0
    x_pad = 0.05 * (x_hi - x_lo) or 0.5
    y_pad = 0.05 * (y_hi - y_lo) or 0.5
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def px(x: float) -> float:
        return _LEFT + (x - x_lo) / (x_hi - x_lo) * (_WIDTH - _LEFT - _RIGHT)

    def py(y: float) -> float:
        return _HEIGHT - _BOTTOM - (y - y_lo) / (y_hi - y_lo) * (
            _HEIGHT - _TOP - _BOTTOM
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]

    # axes and grid
    axis_style = 'stroke="#333" stroke-width="1"'
    parts.append(
        f'<line x1="{_LEFT}" y1="{_HEIGHT - _BOTTOM}" x2="{_WIDTH - _RIGHT}" '
        f'y2="{_HEIGHT - _BOTTOM}" {axis_style}/>'
    )
    parts.append(
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_HEIGHT - _BOTTOM}" '
        f"{axis_style}/>"
    )
    for tick in _ticks(x_lo, x_hi):
        x = px(tick)
        parts.append(
            f'<line x1="{x:.1f}" y1="{_HEIGHT - _BOTTOM}" x2="{x:.1f}" '
            f'y2="{_HEIGHT - _BOTTOM + 5}" {axis_style}/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{_HEIGHT - _BOTTOM + 20}" font-size="12" '
            f'text-anchor="middle" fill="#333">{tick:g}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        y = py(tick)
        parts.append(
            f'<line x1="{_LEFT - 5}" y1="{y:.1f}" x2="{_LEFT}" y2="{y:.1f}" '
            f"{axis_style}/>"
        )
        parts.append(
            f'<text x="{_LEFT - 9}" y="{y + 4:.1f}" font-size="12" '
            f'text-anchor="end" fill="#333">{tick:g}</text>'
        )
    parts.append(
        f'<text x="{(_LEFT + _WIDTH - _RIGHT) / 2:.1f}" y="{_HEIGHT - 14}" '
        f'font-size="13" text-anchor="middle" fill="#333">log10(N)</text>'
    )
    parts.append(
        f'<text x="18" y="{(_TOP + _HEIGHT - _BOTTOM) / 2:.1f}" font-size="13" '
        f'text-anchor="middle" fill="#333" '
        f'transform="rotate(-90 18 {(_TOP + _HEIGHT - _BOTTOM) / 2:.1f})">'
        f"log10(excess risk)</text>"
    )

    # series
    for i, (s, pts) in enumerate(zip(series, log_pts)):
        color = _COLORS[i % len(_COLORS)]
        if pts:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="1.8"/>'
            )
            for x, y in pts:
                parts.append(
                    f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" '
                    f'fill="{color}"/>'
                )
        if s.slope is not None and s.intercept is not None:
            y1 = s.intercept + s.slope * x_lo
            y2 = s.intercept + s.slope * x_hi
            parts.append(
                f'<line x1="{px(x_lo):.2f}" y1="{py(y1):.2f}" '
                f'x2="{px(x_hi):.2f}" y2="{py(y2):.2f}" stroke="{color}" '
                f'stroke-width="1.2" stroke-dasharray="6,4"/>'
            )

    # legend, top right
    lx = _WIDTH - _RIGHT - 190
    ly = _TOP + 12
    parts.append(
        f'<rect x="{lx - 8}" y="{ly - 14}" width="196" '
        f'height="{18 * len(series) + 10}" fill="white" stroke="#999"/>'
    )
    for i, s in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        y = ly + 18 * i
        parts.append(
            f'<line x1="{lx}" y1="{y - 4}" x2="{lx + 26}" y2="{y - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 32}" y="{y}" font-size="12" fill="#333">'
            f"{escape(s.label)}</text>"
        )

    parts.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(parts) + "\n")
