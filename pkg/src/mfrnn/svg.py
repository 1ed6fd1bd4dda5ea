"""Minimal static SVG line charts (no plotting dependency, no timestamps)."""
from __future__ import annotations

import math
from html import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _num(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.0e}"
    return f"{v:.3g}"


def _linear_ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    return [first + k * step for k in range(int((hi - first) / step + 1e-9) + 1)]


def _log_ticks(lo, hi):
    # lo, hi are log10 values
    return [10.0 ** e for e in range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)]


def line_chart(series, *, title="", xlabel="", ylabel="", logx=False, logy=False,
               width=640, height=420, markers=False) -> str:
    """Render ``series`` = [(label, xs, ys, style), ...] as an SVG string.

    ``style`` is optional; ``"dashed"`` draws a dashed line.  Points that are
    non-finite (or non-positive on a log axis) are dropped.
    """
    left, right, top, bottom = 70, 150, 36, 50
    pw, ph = width - left - right, height - top - bottom
    cleaned = []
    for item in series:
        label, xs, ys = item[:3]
        style = item[3] if len(item) > 3 else ""
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        if logx:
            ok &= xs > 0
        if logy:
            ok &= ys > 0
        xs, ys = xs[ok], ys[ok]
        if logx:
            xs = np.log10(xs)
        if logy:
            ys = np.log10(ys)
        cleaned.append((label, xs, ys, style))
    allx = np.concatenate([c[1] for c in cleaned]) if cleaned else np.array([])
    ally = np.concatenate([c[2] for c in cleaned]) if cleaned else np.array([])
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    xt = _log_ticks(x0, x1) if logx else _linear_ticks(x0, x1)
    yt = _log_ticks(y0, y1) if logy else _linear_ticks(y0, y1)
    for v in xt:
        pos = math.log10(v) if logx else v
        if x0 <= pos <= x1:
            X = px(pos)
            out.append(f'<line x1="{_num(X)}" y1="{top + ph}" x2="{_num(X)}" y2="{top + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{_num(X)}" y="{top + ph + 18}" text-anchor="middle">{_tick_label(v)}</text>')
    for v in yt:
        pos = math.log10(v) if logy else v
        if y0 <= pos <= y1:
            Y = py(pos)
            out.append(f'<line x1="{left - 5}" y1="{_num(Y)}" x2="{left}" y2="{_num(Y)}" stroke="black"/>')
            out.append(f'<line x1="{left}" y1="{_num(Y)}" x2="{left + pw}" y2="{_num(Y)}" stroke="#e0e0e0"/>')
            out.append(f'<text x="{left - 8}" y="{_num(Y + 4)}" text-anchor="end">{_tick_label(v)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>')
    for k, (label, xs, ys, style) in enumerate(cleaned):
        color = PALETTE[k % len(PALETTE)]
        dash = ' stroke-dasharray="6 4"' if style == "dashed" else ""
        if xs.size:
            pts = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in zip(xs, ys))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
            if markers:
                out.extend(f'<circle cx="{_num(px(x))}" cy="{_num(py(y))}" r="3" fill="{color}"/>'
                           for x, y in zip(xs, ys))
        ly = top + 12 + 16 * k
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly + 4}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
