"""Minimal self-contained SVG charts: lines, points, and error bars.

No external renderer is involved; the output is a single standalone SVG
document with deterministic formatting, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

# D1..D6 detector palette: black, grey, blue, cyan, red, pink
PALETTE = ["#000000", "#808080", "#0000cc", "#00a0a0", "#cc0000", "#e060a0"]

WIDTH, HEIGHT = 760, 500
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 72, 20, 40, 52


@dataclass
class Series:
    """One plotted data column."""
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    color: str = PALETTE[0]
    yerr: Optional[np.ndarray] = None
    line: bool = True
    points: bool = False

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have the same length")
        if self.yerr is not None:
            self.yerr = np.asarray(self.yerr, dtype=float)
            if self.yerr.shape != self.y.shape:
                raise ValueError("yerr must match y")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _tick_values(lo: float, hi: float, target: int = 6) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    magnitude = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * magnitude
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def _tick_label(value: float) -> str:
    return f"{value:.6g}"


def render_chart(series: Sequence[Series], title: str = "",
                 xlabel: str = "", ylabel: str = "") -> str:
    """Render the series to an SVG document string."""
    if not series:
        raise ValueError("nothing to plot")
    xs = np.concatenate([s.x for s in series])
    lows = [s.y if s.yerr is None else s.y - s.yerr for s in series]
    highs = [s.y if s.yerr is None else s.y + s.yerr for s in series]
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo = min(float(np.min(v)) for v in lows)
    y_hi = max(float(np.max(v)) for v in highs)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    # pin the axis to zero for non-negative data that nearly touches it
    y_floor = 0.0 if 0.0 <= y_lo <= pad else y_lo - pad
    y_lo, y_hi = y_floor, y_hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(v: float) -> float:
        return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v: float) -> float:
        return MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts: List[str] = []
    parts.append('<?xml version="1.0" encoding="UTF-8"?>')
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    parts.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.0f}" y="24" font-family="sans-serif" '
            f'font-size="16" text-anchor="middle">{escape(title)}</text>'
        )

    # axes box and ticks
    x0, y0 = MARGIN_LEFT, MARGIN_TOP + plot_h
    parts.append(
        f'<rect x="{x0}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    for t in _tick_values(x_lo, x_hi):
        px = sx(t)
        parts.append(f'<line x1="{_fmt(px)}" y1="{y0}" x2="{_fmt(px)}" '
                     f'y2="{y0 + 5}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{y0 + 18}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="middle">{_tick_label(t)}</text>')
    for t in _tick_values(y_lo, y_hi):
        py = sy(t)
        parts.append(f'<line x1="{x0 - 5}" y1="{_fmt(py)}" x2="{x0}" '
                     f'y2="{_fmt(py)}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="end">{_tick_label(t)}</text>')
    if xlabel:
        parts.append(f'<text x="{MARGIN_LEFT + plot_w / 2:.0f}" y="{HEIGHT - 14}" '
                     f'font-family="sans-serif" font-size="13" '
                     f'text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cx, cy = 18, MARGIN_TOP + plot_h / 2
        parts.append(f'<text x="{cx}" y="{cy:.0f}" font-family="sans-serif" '
                     f'font-size="13" text-anchor="middle" '
                     f'transform="rotate(-90 {cx} {cy:.0f})">{escape(ylabel)}</text>')

    # data
    for s in series:
        color = s.color
        if s.yerr is not None:
            for xi, yi, ei in zip(s.x, s.y, s.yerr):
                if ei <= 0:
                    continue
                px = sx(xi)
                parts.append(
                    f'<line x1="{_fmt(px)}" y1="{_fmt(sy(yi - ei))}" '
                    f'x2="{_fmt(px)}" y2="{_fmt(sy(yi + ei))}" '
                    f'stroke="{color}" stroke-width="1"/>'
                )
        if s.line:
            coords = " ".join(f"{_fmt(sx(xi))},{_fmt(sy(yi))}"
                              for xi, yi in zip(s.x, s.y))
            parts.append(f'<polyline points="{coords}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
        if s.points:
            for xi, yi in zip(s.x, s.y):
                parts.append(f'<circle cx="{_fmt(sx(xi))}" cy="{_fmt(sy(yi))}" '
                             f'r="2.2" fill="{color}"/>')

    # legend
    ly = MARGIN_TOP + 14
    for s in series:
        if not s.label:
            continue
        lx = MARGIN_LEFT + plot_w - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                     f'stroke="{s.color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
                     f'font-size="12">{escape(s.label)}</text>')
        ly += 16

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
