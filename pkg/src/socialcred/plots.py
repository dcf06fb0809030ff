"""Minimal deterministic SVG renderers for ROC curves, bars and time series.

String output only, fixed precision, no plotting dependencies, so two
runs over identical data produce identical bytes.
"""

from __future__ import annotations

from typing import Mapping, Sequence

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_W, _H = 480, 360
_ML, _MR, _MT, _MB = 60, 20, 30, 50


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="14">{title}</text>',
    ]


def _plot_area() -> tuple[float, float, float, float]:
    return _ML, _MT, _W - _MR, _H - _MB


def roc_svg(curves: Sequence[tuple[str, Sequence[tuple[float, float]]]],
            title: str = "ROC curves") -> str:
    """Polyline per (label, roc points) pair on a unit square with the chance diagonal."""
    x0, y0, x1, y1 = _plot_area()

    def sx(v: float) -> float:
        return x0 + v * (x1 - x0)

    def sy(v: float) -> float:
        return y1 - v * (y1 - y0)

    parts = _header(title)
    parts.append(f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
                 'fill="none" stroke="black"/>')
    parts.append(f'<line x1="{sx(0)}" y1="{sy(0)}" x2="{sx(1)}" y2="{sy(1)}" '
                 'stroke="#aaaaaa" stroke-dasharray="4 3"/>')
    parts.append(f'<text x="{(x0 + x1) / 2}" y="{_H - 14}" text-anchor="middle">false positive rate</text>')
    parts.append(f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(y0 + y1) / 2})">true positive rate</text>')
    for i, (label, points) in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{_fmt(sx(fx))},{_fmt(sy(fy))}" for fx, fy in points)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{x1 - 8}" y="{y0 + 16 + 16 * i}" text-anchor="end" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def grouped_bars_svg(groups: Sequence[str], series: Mapping[str, Sequence[float]],
                     title: str = "") -> str:
    """Grouped vertical bars; one group per model, one bar per series entry."""
    x0, y0, x1, y1 = _plot_area()
    names = list(series)
    n_groups, n_series = len(groups), len(names)
    peak = max((max(vals) for vals in series.values() if len(vals)), default=1.0) or 1.0
    group_width = (x1 - x0) / max(n_groups, 1)
    bar_width = group_width * 0.8 / max(n_series, 1)

    parts = _header(title)
    parts.append(f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>')
    for gi, group in enumerate(groups):
        gx = x0 + gi * group_width + group_width * 0.1
        for si, name in enumerate(names):
            value = series[name][gi]
            height = (y1 - y0) * value / peak
            bx = gx + si * bar_width
            color = _PALETTE[si % len(_PALETTE)]
            parts.append(f'<rect x="{_fmt(bx)}" y="{_fmt(y1 - height)}" width="{_fmt(bar_width)}" '
                         f'height="{_fmt(height)}" fill="{color}"/>')
            parts.append(f'<text x="{_fmt(bx + bar_width / 2)}" y="{_fmt(y1 - height - 4)}" '
                         f'text-anchor="middle" font-size="10">{_fmt(value)}</text>')
        parts.append(f'<text x="{_fmt(gx + group_width * 0.4)}" y="{y1 + 16}" '
                     f'text-anchor="middle">{group}</text>')
    for si, name in enumerate(names):
        color = _PALETTE[si % len(_PALETTE)]
        parts.append(f'<text x="{x1 - 8}" y="{y0 + 16 + 16 * si}" text-anchor="end" '
                     f'fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def temporal_series_svg(points: Sequence[tuple[str, float]], title: str = "") -> str:
    """Line chart of (window label, value) points in the given order."""
    x0, y0, x1, y1 = _plot_area()
    parts = _header(title)
    parts.append(f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>')
    if points:
        peak = max(v for _, v in points) or 1.0
        step = (x1 - x0) / max(len(points) - 1, 1)
        coords = []
        for i, (label, value) in enumerate(points):
            px = x0 + i * step
            py = y1 - (y1 - y0) * value / peak
            coords.append(f"{_fmt(px)},{_fmt(py)}")
            parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" fill="{_PALETTE[0]}"/>')
            parts.append(f'<text x="{_fmt(px)}" y="{y1 + 16}" text-anchor="middle" '
                         f'font-size="10">{label}</text>')
        parts.append(f'<polyline points="{" ".join(coords)}" fill="none" '
                     f'stroke="{_PALETTE[0]}" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
