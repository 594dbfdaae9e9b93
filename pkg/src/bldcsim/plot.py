"""Self-contained SVG line plots of trace columns against time."""

from __future__ import annotations

import math
from pathlib import Path
from typing import List, Sequence
from xml.sax.saxutils import escape

from .engine import TRACE_FIELDS, TraceRecord

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

WIDTH, HEIGHT = 900, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 30, 60

PLOTTABLE = tuple(f for f in TRACE_FIELDS if f != "mode")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-12 * abs(hi):
        ticks.append(first + k * step)
        k += 1
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_svg(trace: Sequence[TraceRecord], columns: Sequence[str]) -> str:
    columns = list(columns)
    if not columns:
        raise ValueError("no columns to plot")
    for col in columns:
        if col not in PLOTTABLE:
            raise ValueError(f"unknown trace column {col!r}")

    x0, x1 = LEFT, WIDTH - RIGHT
    y0, y1 = TOP, HEIGHT - BOTTOM
    ts = [rec.t for rec in trace]
    series = [[float(getattr(rec, col)) for rec in trace] for col in columns]
    finite = [v for s in series for v in s if math.isfinite(v)]

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
           f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
           f'fill="none" stroke="#000000"/>']

    if ts and finite:
        t_lo, t_hi = ts[0], ts[-1]
        if t_hi <= t_lo:
            t_hi = t_lo + 1.0
        v_lo, v_hi = min(finite), max(finite)
        if v_hi <= v_lo:
            v_lo, v_hi = v_lo - 1.0, v_hi + 1.0
        pad = 0.05 * (v_hi - v_lo)
        v_lo, v_hi = v_lo - pad, v_hi + pad

        def px(t):
            return x0 + (t - t_lo) / (t_hi - t_lo) * (x1 - x0)

        def py(v):
            return y1 - (v - v_lo) / (v_hi - v_lo) * (y1 - y0)

        for tick in _nice_ticks(t_lo, t_hi):
            x = px(tick)
            out.append(f'<line x1="{x:.2f}" y1="{y1}" x2="{x:.2f}" y2="{y1 + 5}" stroke="#000000"/>')
            out.append(f'<text x="{x:.2f}" y="{y1 + 18}" text-anchor="middle">{_fmt(tick)}</text>')
        for tick in _nice_ticks(v_lo, v_hi):
            y = py(tick)
            out.append(f'<line x1="{x0 - 5}" y1="{y:.2f}" x2="{x1}" y2="{y:.2f}" stroke="#dddddd"/>')
            out.append(f'<text x="{x0 - 8}" y="{y + 4:.2f}" text-anchor="end">{_fmt(tick)}</text>')
        for k, values in enumerate(series):
            pts = " ".join(f"{px(t):.2f},{py(v):.2f}" for t, v in zip(ts, values)
                           if math.isfinite(v))
            out.append(f'<polyline fill="none" stroke="{COLORS[k % len(COLORS)]}" '
                       f'stroke-width="1.2" points="{pts}"/>')

    for k, col in enumerate(columns):
        y = y0 + 10 + 18 * k
        color = COLORS[k % len(COLORS)]
        out.append(f'<line x1="{x1 + 15}" y1="{y}" x2="{x1 + 40}" y2="{y}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{x1 + 46}" y="{y + 4}">{escape(col)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">t [s]</text>')
    out.append(f'<text x="18" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(y0 + y1) / 2:.1f})">{escape(", ".join(columns))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(trace: Sequence[TraceRecord], columns: Sequence[str], path) -> None:
    svg = render_svg(trace, columns)
    try:
        Path(path).write_text(svg, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc.strerror or exc}") from exc
