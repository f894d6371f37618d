"""Deterministic SVG emitters: star glyphs, D-statistic intervals, box plots, accuracy bars.

Every emitter is a pure function of its inputs. Coordinates are written
with a fixed number of decimals and numeric labels go through
``format_label`` (round half to even on the decimal value), so equal
inputs give byte-identical SVG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .entropy import SeProfile
from .errors import UndefinedSe
from .stats import DStat

__all__ = [
    "PlotSpec",
    "format_label",
    "quartiles",
    "star_glyph_svg",
    "interval_plot_svg",
    "boxplot_svg",
    "accuracy_bar_svg",
]

PLOT_KINDS = ("StarGlyph", "BoxPlot", "IntervalPlot", "BarChart")
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    series_labels: tuple[str, ...] = ()
    x_label: str = ""
    y_label: str = ""
    title: str = ""
    scale: str = "shared"  # or "independent"
    output_path: str | None = None
    width: int = 480
    height: int = 360

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")
        if self.scale not in ("shared", "independent"):
            raise ValueError(f"unknown scale policy {self.scale!r}")
        if len(set(self.series_labels)) != len(self.series_labels):
            raise ValueError("series labels must be unique")


def format_label(value: float, decimals: int = 3) -> str:
    """Fixed-decimal text, rounding the exact binary value half to even."""
    q = Decimal(1).scaleb(-decimals)
    out = Decimal(float(value)).quantize(q, rounding=ROUND_HALF_EVEN)
    if out == 0:
        out = abs(out)  # no "-0.0"
    return f"{out:.{decimals}f}"


def _n(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def quartiles(values) -> tuple[float, float, float]:
    """Q1, median, Q3 by midpoint linear interpolation (p_k = (k - 0.5)/n)."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty group")

    def q(p):
        h = n * p + 0.5  # 1-based fractional rank
        if h <= 1:
            return float(x[0])
        if h >= n:
            return float(x[-1])
        lo = int(math.floor(h))
        return float(x[lo - 1] + (h - lo) * (x[lo] - x[lo - 1]))

    return q(0.25), q(0.5), q(0.75)


class _Svg:
    def __init__(self, width: int, height: int, title: str = ""):
        self.w, self.h = width, height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        ]
        if title:
            self.text(width / 2, 16, title, anchor="middle", size=13)

    def add(self, s: str):
        self.parts.append(s)

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0, dash=None, cls=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        extra += f' class="{cls}"' if cls else ""
        self.add(f'<line x1="{_n(x1)}" y1="{_n(y1)}" x2="{_n(x2)}" y2="{_n(y2)}" '
                 f'stroke="{stroke}" stroke-width="{width}"{extra}/>')

    def text(self, x, y, s, anchor="start", size=None, rotate=None, cls=None):
        extra = f' font-size="{size}"' if size else ""
        if rotate is not None:
            extra += f' transform="rotate({rotate} {_n(x)} {_n(y)})"'
        extra += f' class="{cls}"' if cls else ""
        self.add(f'<text x="{_n(x)}" y="{_n(y)}" text-anchor="{anchor}"{extra}>{escape(str(s))}</text>')

    def bytes(self) -> bytes:
        return ("\n".join(self.parts + ["</svg>"]) + "\n").encode("utf-8")


def _axis_labels(svg: _Svg, spec: PlotSpec, left: float, bottom: float):
    if spec.x_label:
        svg.text(svg.w / 2, svg.h - 6, spec.x_label, anchor="middle")
    if spec.y_label:
        svg.text(14, (bottom + 30) / 2, spec.y_label, anchor="middle", rotate=-90)


# -- star glyph --------------------------------------------------------------


def star_glyph_svg(profiles: Mapping[str, SeProfile] | Sequence[tuple[str, SeProfile]],
                   channels: Sequence[str], spec: PlotSpec | None = None) -> bytes:
    """One closed polygon per profile, axis i at angle 2*pi*i/k from 12 o'clock.

    The radius is linear in SE, 0 at the centre. With the shared scale every
    polygon uses the largest value over all profiles; "independent" scales
    each profile by its own maximum.
    """
    spec = spec or PlotSpec("StarGlyph")
    items = list(profiles.items()) if isinstance(profiles, Mapping) else list(profiles)
    if len(channels) < 3:
        raise ValueError("a star glyph needs at least 3 axes")
    if not items:
        raise ValueError("no profiles")
    if len({name for name, _ in items}) != len(items):
        raise ValueError("profile names must be unique")
    values = []
    for name, prof in items:
        row = []
        for ch in channels:
            v = prof.value(ch) if ch in prof else None
            if v is None:
                raise UndefinedSe(ch, name)
            row.append(v)
        values.append(row)
    values = np.asarray(values, dtype=np.float64)

    svg = _Svg(spec.width, spec.height, spec.title)
    cx, cy = spec.width / 2, spec.height / 2 + 8
    radius = min(spec.width, spec.height) / 2 - 50
    k = len(channels)
    angles = [2 * math.pi * i / k for i in range(k)]
    shared = float(values.max())

    svg.add('<g class="axes">')
    for a, ch in zip(angles, channels):
        x, y = cx + radius * math.sin(a), cy - radius * math.cos(a)
        svg.line(cx, cy, x, y, stroke="#999999", width=0.5)
        svg.text(cx + (radius + 14) * math.sin(a), cy - (radius + 14) * math.cos(a) + 4, ch, anchor="middle")
    svg.add("</g>")
    if spec.scale == "shared":
        svg.text(8, spec.height - 8, f"max SE = {format_label(shared)}")

    for idx, ((name, _), row) in enumerate(zip(items, values)):
        top = shared if spec.scale == "shared" else float(row.max())
        scale = radius / top if top > 0 else 0.0
        pts = " ".join(f"{_n(cx + v * scale * math.sin(a))},{_n(cy - v * scale * math.cos(a))}" for v, a in zip(row, angles))
        colour = _PALETTE[idx % len(_PALETTE)]
        svg.add(f'<polygon class="profile" data-label="{escape(name)}" points="{pts}" '
                f'fill="{colour}" fill-opacity="0.15" stroke="{colour}" stroke-width="1.5"/>')
        svg.text(spec.width - 8, 30 + 14 * idx, name, anchor="end")
        svg.add(f'<rect x="{spec.width - 8 - 7 * len(name) - 16}" y="{22 + 14 * idx}" width="10" height="10" fill="{colour}"/>')
    return svg.bytes()


# -- D-statistic intervals ---------------------------------------------------


def interval_plot_svg(dstats: Sequence[DStat], spec: PlotSpec | None = None) -> bytes:
    """Vertical 95% CI whiskers per subject with a dashed zero line."""
    spec = spec or PlotSpec("IntervalPlot", y_label="D")
    if not dstats:
        raise ValueError("no D statistics")
    svg = _Svg(spec.width, spec.height, spec.title)
    left, right, top, bottom = 60.0, spec.width - 20.0, 30.0, spec.height - 50.0
    lo = min(min(d.ci95[0] for d in dstats), 0.0)
    hi = max(max(d.ci95[1] for d in dstats), 0.0)
    if hi == lo:
        lo, hi = -1.0, 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def ypos(v):
        return bottom - (v - lo) / (hi - lo) * (bottom - top)

    svg.line(left, top, left, bottom)
    svg.line(left, bottom, right, bottom)
    for v in np.linspace(lo, hi, 5):
        svg.line(left - 4, ypos(v), left, ypos(v))
        svg.text(left - 6, ypos(v) + 4, format_label(v), anchor="end")
    svg.line(left, ypos(0.0), right, ypos(0.0), stroke="#888888", dash="4,3", cls="zero")

    step = (right - left) / len(dstats)
    for i, d in enumerate(dstats):
        x = left + step * (i + 0.5)
        label = spec.series_labels[i] if i < len(spec.series_labels) else d.subject_id
        colour = "#d62728" if d.excludes_zero else "#1f77b4"
        svg.add(f'<g class="whisker" data-label="{escape(label)}" data-lo="{format_label(d.ci95[0], 6)}" '
                f'data-hi="{format_label(d.ci95[1], 6)}">')
        svg.line(x, ypos(d.ci95[0]), x, ypos(d.ci95[1]), stroke=colour, width=1.5)
        for v in d.ci95:
            svg.line(x - 5, ypos(v), x + 5, ypos(v), stroke=colour, width=1.5)
        svg.add(f'<circle cx="{_n(x)}" cy="{_n(ypos(d.mean_d))}" r="3" fill="{colour}"/>')
        svg.add("</g>")
        svg.text(x, bottom + 14, label, anchor="middle")
    _axis_labels(svg, spec, left, bottom)
    return svg.bytes()


# -- box plot ----------------------------------------------------------------


def boxplot_svg(groups: Mapping[str, Sequence[float]] | Sequence[tuple[str, Sequence[float]]],
                spec: PlotSpec | None = None) -> bytes:
    """Quartile boxes (midpoint interpolation), min/max whiskers and a mean marker."""
    spec = spec or PlotSpec("BoxPlot", y_label="SE")
    items = list(groups.items()) if isinstance(groups, Mapping) else list(groups)
    if not items or any(len(v) == 0 for _, v in items):
        raise ValueError("box plots need non-empty groups")
    svg = _Svg(spec.width, spec.height, spec.title)
    left, right, top, bottom = 60.0, spec.width - 20.0, 30.0, spec.height - 50.0
    lo = min(float(np.min(v)) for _, v in items)
    hi = max(float(np.max(v)) for _, v in items)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def ypos(v):
        return bottom - (v - lo) / (hi - lo) * (bottom - top)

    svg.line(left, top, left, bottom)
    svg.line(left, bottom, right, bottom)
    for v in np.linspace(lo, hi, 5):
        svg.line(left - 4, ypos(v), left, ypos(v))
        svg.text(left - 6, ypos(v) + 4, format_label(v), anchor="end")

    step = (right - left) / len(items)
    half = min(20.0, step * 0.3)
    for i, (name, vals) in enumerate(items):
        x = left + step * (i + 0.5)
        q1, med, q3 = quartiles(vals)
        mean = math.fsum(float(v) for v in vals) / len(vals)
        vmin, vmax = float(np.min(vals)), float(np.max(vals))
        svg.add(f'<g class="box" data-label="{escape(name)}" data-q1="{format_label(q1, 6)}" '
                f'data-median="{format_label(med, 6)}" data-q3="{format_label(q3, 6)}" data-mean="{format_label(mean, 6)}">')
        svg.line(x, ypos(vmin), x, ypos(q1))
        svg.line(x, ypos(q3), x, ypos(vmax))
        svg.add(f'<rect x="{_n(x - half)}" y="{_n(ypos(q3))}" width="{_n(2 * half)}" '
                f'height="{_n(ypos(q1) - ypos(q3))}" fill="#dddddd" stroke="black"/>')
        svg.line(x - half, ypos(med), x + half, ypos(med), width=2.0)
        # circled cross for the mean
        my = ypos(mean)
        svg.add(f'<circle cx="{_n(x)}" cy="{_n(my)}" r="4" fill="none" stroke="black"/>')
        svg.line(x - 2.83, my - 2.83, x + 2.83, my + 2.83)
        svg.line(x - 2.83, my + 2.83, x + 2.83, my - 2.83)
        svg.add("</g>")
        svg.text(x, bottom + 14, name, anchor="middle")
    _axis_labels(svg, spec, left, bottom)
    return svg.bytes()


# -- accuracy bars -----------------------------------------------------------


def accuracy_bar_svg(accuracies: Mapping[str, float] | Sequence[tuple[str, float]],
                     spec: PlotSpec | None = None) -> bytes:
    """Bars on a 0-100% axis, each labelled with its percentage to one decimal."""
    spec = spec or PlotSpec("BarChart", y_label="Accuracy (%)")
    items = list(accuracies.items()) if isinstance(accuracies, Mapping) else list(accuracies)
    if not items:
        raise ValueError("no bars")
    svg = _Svg(spec.width, spec.height, spec.title)
    left, right, top, bottom = 60.0, spec.width - 20.0, 30.0, spec.height - 50.0

    def ypos(pct):
        return bottom - pct / 100.0 * (bottom - top)

    svg.line(left, top, left, bottom)
    svg.line(left, bottom, right, bottom)
    for pct in range(0, 101, 20):
        svg.line(left - 4, ypos(pct), left, ypos(pct))
        svg.text(left - 6, ypos(pct) + 4, str(pct), anchor="end")
    step = (right - left) / len(items)
    for i, (name, acc) in enumerate(items):
        pct = 100.0 * float(acc)
        x = left + step * (i + 0.5)
        w = step * 0.6
        colour = _PALETTE[i % len(_PALETTE)]
        svg.add(f'<rect class="bar" data-label="{escape(name)}" x="{_n(x - w / 2)}" y="{_n(ypos(pct))}" '
                f'width="{_n(w)}" height="{_n(bottom - ypos(pct))}" fill="{colour}"/>')
        svg.text(x, ypos(pct) - 4, format_label(pct, 1) + "%", anchor="middle", cls="value")
        svg.text(x, bottom + 14, name, anchor="middle")
    _axis_labels(svg, spec, left, bottom)
    return svg.bytes()
