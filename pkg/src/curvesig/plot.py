"""Minimal self-contained SVG line plots (no plotting library needed).

Output is a pure function of the inputs, so files can be compared byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import PlotError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).ravel()
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if len(self.x) != len(self.y):
            raise PlotError("series x and y differ in length")


@dataclass
class PlotStyle:
    title: str = ""
    xlabel: str = "s"
    ylabel: str = "kappa"
    width: int = 640
    height: int = 400
    colors: tuple = PALETTE
    stroke_width: float = 1.5
    ticks: int = 5


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if abs(v) < 1e6 else f"{v:.3e}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def _limits(lo: float, hi: float) -> tuple[float, float]:
    if not np.isfinite(lo) or not np.isfinite(hi):
        return 0.0, 1.0
    if hi == lo:
        pad = 0.5 if lo == 0 else 0.05 * abs(lo)
        return lo - pad, hi + pad
    pad = 0.03 * (hi - lo)
    return lo - pad, hi + pad


def render_svg(series, style: PlotStyle | None = None) -> str:
    style = style or PlotStyle()
    series = [s if isinstance(s, Series) else Series(*s) for s in series]
    if not series or all(len(s.x) == 0 for s in series):
        raise PlotError("nothing to plot: empty series")
    xs = np.concatenate([s.x for s in series])
    ys = np.concatenate([s.y for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    if not ok.any():
        raise PlotError("series contain no finite points")
    x0, x1 = _limits(xs[ok].min(), xs[ok].max())
    y0, y1 = _limits(ys[ok].min(), ys[ok].max())

    W, H = style.width, style.height
    left, right, top, bottom = 64, 16, 32 if style.title else 16, 48
    pw, ph = W - left - right, H - top - bottom

    def tx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def ty(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
    ]
    if style.title:
        out.append(f'<text x="{W / 2:g}" y="20" text-anchor="middle" font-size="13">{escape(style.title)}</text>')
    # axes frame and ticks
    out.append('<g class="axes" stroke="black" stroke-width="1" fill="none">')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}"/>')
    for v in np.linspace(x0, x1, style.ticks):
        px = _fmt(tx(v))
        out.append(f'<line x1="{px}" y1="{top + ph}" x2="{px}" y2="{top + ph + 4}"/>')
    for v in np.linspace(y0, y1, style.ticks):
        py = _fmt(ty(v))
        out.append(f'<line x1="{left - 4}" y1="{py}" x2="{left}" y2="{py}"/>')
    out.append("</g>")
    out.append('<g class="ticklabels" fill="black">')
    for v in np.linspace(x0, x1, style.ticks):
        out.append(f'<text x="{_fmt(tx(v))}" y="{top + ph + 16}" text-anchor="middle">{_tick_label(v)}</text>')
    for v in np.linspace(y0, y1, style.ticks):
        out.append(f'<text x="{left - 6}" y="{_fmt(ty(v) + 4)}" text-anchor="end">{_tick_label(v)}</text>')
    out.append("</g>")
    out.append(f'<text x="{left + pw / 2:g}" y="{H - 10}" text-anchor="middle">{escape(style.xlabel)}</text>')
    out.append(
        f'<text x="14" y="{top + ph / 2:g}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:g})">{escape(style.ylabel)}</text>'
    )

    for k, s in enumerate(series):
        color = style.colors[k % len(style.colors)]
        m = np.isfinite(s.x) & np.isfinite(s.y)
        pts = " ".join(f"{_fmt(tx(a))},{_fmt(ty(b))}" for a, b in zip(s.x[m], s.y[m]))
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{style.stroke_width:g}" points="{pts}"/>'
        )

    out.append('<g class="legend">')
    for k, s in enumerate(series):
        color = style.colors[k % len(style.colors)]
        ly = top + 14 + 16 * k
        label = s.label or f"series {k + 1}"
        out.append(f'<line x1="{left + 10}" y1="{ly}" x2="{left + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 36}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series, style: PlotStyle | None = None, path=None) -> Path:
    """Write ``series`` (Series or (x, y[, label]) tuples) as an SVG file."""
    if path is None:
        raise PlotError("no output path given")
    svg = render_svg(series, style)
    path = Path(path)
    path.write_text(svg, encoding="utf-8")
    return path


def signature_series(sig, label: str = "", by_index: bool = False) -> Series:
    x = np.arange(len(sig), dtype=np.float64) if by_index else sig.s
    return Series(x, sig.kappa, label)
