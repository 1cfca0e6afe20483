"""Dependency-free SVG regret plots: one median line and shaded band per series."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from mabsim.errors import InvalidArgument
from mabsim.harness import AggregateStats

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
WIDTH, HEIGHT = 720, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 40, 60


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step) + 1)]


def _num(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def emit_svg_plot(
    series: Sequence[tuple[str, AggregateStats]],
    path: str | Path,
    *,
    log_x: bool = False,
    title: str | None = None,
) -> Path:
    """Write a self-contained SVG with one labelled curve per series."""
    if not series:
        raise InvalidArgument("nothing to plot")
    t_min = min(float(s.t[0]) for _, s in series)
    t_max = max(float(s.t[-1]) for _, s in series)
    y_max = max(float(max(s.hi95.max(), s.median.max())) for _, s in series) or 1.0
    fx = math.log10 if log_x else float
    x0, x1 = fx(max(t_min, 1.0) if log_x else t_min), fx(t_max)
    if x1 <= x0:
        x1 = x0 + 1.0
    plot_w, plot_h = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(t: float) -> float:
        return LEFT + (fx(max(t, 1.0) if log_x else t) - x0) / (x1 - x0) * plot_w

    def py(y: float) -> float:
        return TOP + plot_h - y / y_max * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')

    # axes and ticks
    base_y = TOP + plot_h
    out.append(f'<g class="axes" stroke="black" fill="none">'
               f'<line x1="{LEFT}" y1="{base_y}" x2="{LEFT + plot_w}" y2="{base_y}"/>'
               f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base_y}"/></g>')
    if log_x:
        xt = [10.0 ** e for e in range(math.ceil(x0), math.floor(x1) + 1)]
    else:
        xt = _ticks(t_min, t_max)
    for v in xt:
        x = px(v)
        label = f"1e{int(round(math.log10(v)))}" if log_x else f"{v:g}"
        out.append(f'<line x1="{x:.2f}" y1="{base_y}" x2="{x:.2f}" y2="{base_y + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{base_y + 18}" text-anchor="middle">{label}</text>')
    for v in _ticks(0.0, y_max):
        y = py(v)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{_num(v)}</text>')
    out.append(f'<text x="{LEFT + plot_w / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">'
               f'time step t{" (log scale)" if log_x else ""}</text>')
    out.append(f'<text transform="translate(20 {TOP + plot_h / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">cumulative regret per agent</text>')

    for i, (label, s) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        upper = [f"{px(t):.2f},{py(v):.2f}" for t, v in zip(s.t, s.hi95)]
        lower = [f"{px(t):.2f},{py(v):.2f}" for t, v in zip(s.t, s.lo95)]
        line = [f"{px(t):.2f},{py(v):.2f}" for t, v in zip(s.t, s.median)]
        out.append(f'<g class="series" data-label="{escape(label)}">')
        out.append(f'<polygon class="band" points="{" ".join(upper + lower[::-1])}" '
                   f'fill="{color}" fill-opacity="0.2" stroke="none"/>')
        out.append(f'<polyline class="median" points="{" ".join(line)}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append("</g>")
        ly = TOP + 10 + 20 * i
        lx = LEFT + plot_w + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
