"""Dependency-free SVG emission for the two figure kinds.

Output is plain text with fixed float formatting, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _f(x: float) -> str:
    return format(float(x), ".6g")


def _header(width: int, height: int) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]


def svg_constellation(symbols, title: str = "constellation") -> str:
    """Scatter of complex symbols with the rms-amplitude (power) circle."""
    z = np.asarray(symbols, dtype=np.complex128).ravel()
    if z.size == 0:
        raise ValueError("need at least one symbol")
    rms = math.sqrt(float(np.mean(np.abs(z) ** 2)))
    span = max(float(np.abs(z.real).max()), float(np.abs(z.imag).max()), rms)
    limit = 1.15 * span if span > 0.0 else 1.0
    size, pad = 560, 50
    plot = size - 2 * pad

    def px(x):
        return pad + (x + limit) / (2 * limit) * plot

    def py(y):
        return pad + (limit - y) / (2 * limit) * plot

    parts = _header(size, size)
    parts.append(f'<text x="{size // 2}" y="24" text-anchor="middle" font-size="15">'
                 f"{escape(title)}</text>")
    parts.append(f'<rect x="{pad}" y="{pad}" width="{plot}" height="{plot}" '
                 f'fill="none" stroke="#999"/>')
    parts.append(f'<line x1="{pad}" y1="{_f(py(0))}" x2="{pad + plot}" y2="{_f(py(0))}" '
                 f'stroke="#ccc"/>')
    parts.append(f'<line x1="{_f(px(0))}" y1="{pad}" x2="{_f(px(0))}" y2="{pad + plot}" '
                 f'stroke="#ccc"/>')
    if rms > 0.0:
        parts.append(f'<circle cx="{_f(px(0))}" cy="{_f(py(0))}" r="{_f(rms / (2 * limit) * plot)}" '
                     f'fill="none" stroke="#888" stroke-dasharray="5 4"/>')
    for zi in z:
        parts.append(f'<circle cx="{_f(px(zi.real))}" cy="{_f(py(zi.imag))}" r="4" '
                     f'fill="{_COLORS[0]}"/>')
    parts.append(f'<text x="{pad + plot}" y="{size - 14}" text-anchor="end">Re, '
                 f'range &#177;{_f(limit)}</text>')
    parts.append(f'<text x="14" y="{pad}" text-anchor="start">Im</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_rate_power(series, title: str = "rate-power tradeoff") -> str:
    """Polyline per (label, [(one_minus_ser, p_del), ...]) series with a legend.

    Series with no points still appear in the legend; if every series is
    empty the chart carries a "no accepted runs" annotation instead of data.
    """
    series = [(str(label), list(pts)) for label, pts in series]
    width, height, pad = 640, 440, 60
    plot_w, plot_h = width - 2 * pad, height - 2 * pad
    allpts = [p for _, pts in series for p in pts]
    parts = _header(width, height)
    parts.append(f'<text x="{width // 2}" y="26" text-anchor="middle" font-size="15">'
                 f"{escape(title)}</text>")
    parts.append(f'<rect x="{pad}" y="{pad}" width="{plot_w}" height="{plot_h}" '
                 f'fill="none" stroke="#333"/>')
    parts.append(f'<text x="{width // 2}" y="{height - 16}" text-anchor="middle">1 - SER</text>')
    parts.append(f'<text x="18" y="{height // 2}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {height // 2})">delivered-power metric</text>')

    if not allpts:
        parts.append(f'<text x="{width // 2}" y="{height // 2}" text-anchor="middle" '
                     f'font-size="15" fill="#777">no accepted runs</text>')

    if allpts:
        xs = [p[0] for p in allpts]
        ys = [p[1] for p in allpts]
        xlo, xhi = min(xs), max(xs)
        ylo, yhi = min(ys), max(ys)
        if xhi == xlo:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        if yhi == ylo:
            ylo, yhi = ylo - 0.5, yhi + 0.5
        xpad = 0.04 * (xhi - xlo)
        ypad = 0.06 * (yhi - ylo)
        xlo, xhi = xlo - xpad, xhi + xpad
        ylo, yhi = ylo - ypad, yhi + ypad

        def px(x):
            return pad + (x - xlo) / (xhi - xlo) * plot_w

        def py(y):
            return pad + (yhi - y) / (yhi - ylo) * plot_h

        for i in range(5):
            xv = xlo + i * (xhi - xlo) / 4
            yv = ylo + i * (yhi - ylo) / 4
            parts.append(f'<line x1="{_f(px(xv))}" y1="{pad}" x2="{_f(px(xv))}" '
                         f'y2="{pad + plot_h}" stroke="#eee"/>')
            parts.append(f'<line x1="{pad}" y1="{_f(py(yv))}" x2="{pad + plot_w}" '
                         f'y2="{_f(py(yv))}" stroke="#eee"/>')
            parts.append(f'<text x="{_f(px(xv))}" y="{pad + plot_h + 16}" text-anchor="middle" '
                         f'font-size="10">{_f(xv)}</text>')
            parts.append(f'<text x="{pad - 6}" y="{_f(py(yv) + 4)}" text-anchor="end" '
                         f'font-size="10">{_f(yv)}</text>')
        for si, (label, pts) in enumerate(series):
            color = _COLORS[si % len(_COLORS)]
            if not pts:
                continue
            coords = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in pts)
            parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                         f'stroke-width="2"/>')
            for x, y in pts:
                parts.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="3.5" '
                             f'fill="{color}"/>')

    for si, (label, _) in enumerate(series):
        color = _COLORS[si % len(_COLORS)]
        ly = pad + 14 + 18 * si
        lx = width - pad - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 26}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 32}" y="{ly}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
