"""Small deterministic SVG writers: heatmaps and line/scatter plots.

Matplotlib embeds timestamps and hashed ids in its SVG output, which
breaks byte-identical reruns; these writers emit plain shapes with fixed
formatting instead, so identical inputs give identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

_FONT = "font-family=\"monospace\" font-size=\"11\""


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _cool_warm(t: float) -> str:
    """Blue-white-red diverging ramp, t in [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    cool = (59, 76, 192)
    mid = (240, 240, 235)
    warm = (180, 4, 38)
    if t < 0.5:
        a, b, u = cool, mid, t * 2
    else:
        a, b, u = mid, warm, (t - 0.5) * 2
    r, g, bl = (round(a[n] + (b[n] - a[n]) * u) for n in range(3))
    return f"rgb({r},{g},{bl})"


def heatmap_svg(path: str | Path, values: np.ndarray, title: str,
                cell_px: int = 8, vmin: float | None = None,
                vmax: float | None = None) -> None:
    """Render a 2D array as colored cells; row 0 is drawn at the bottom."""
    values = np.asarray(values, dtype=float)
    rows, cols = values.shape
    lo = float(values.min()) if vmin is None else vmin
    hi = float(values.max()) if vmax is None else vmax
    span = hi - lo if hi > lo else 1.0
    margin = 30
    width = cols * cell_px + 2 * margin
    height = rows * cell_px + 2 * margin + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{margin}" y="18" {_FONT}>{title}</text>',
    ]
    for r in range(rows):
        y = margin + 20 + (rows - 1 - r) * cell_px
        for c in range(cols):
            color = _cool_warm((values[r, c] - lo) / span)
            parts.append(
                f'<rect x="{margin + c * cell_px}" y="{y}" width="{cell_px}" '
                f'height="{cell_px}" fill="{color}"/>')
    parts.append(
        f'<text x="{margin}" y="{height - 8}" {_FONT}>'
        f'min={lo:.4g} max={hi:.4g}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def line_plot_svg(path: str | Path, series: list[tuple[str, list, list]],
                  title: str, x_label: str, y_label: str,
                  markers: bool = False) -> None:
    """Plot one or more (label, xs, ys) series with shared axes."""
    width, height = 520, 340
    left, right, top, bottom = 60, 140, 30, 50
    colors = ["rgb(31,119,180)", "rgb(255,127,14)", "rgb(44,160,44)",
              "rgb(214,39,40)", "rgb(148,103,189)", "rgb(140,86,75)"]
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if y_hi == y_lo:
        y_hi = y_lo + 1

    def px(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)

    def py(y: float) -> float:
        return height - bottom - (y - y_lo) / (y_hi - y_lo) * (height - top - bottom)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18" {_FONT}>{title}</text>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" '
        f'y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" '
        f'stroke="black"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        parts.append(f'<text x="{_fmt(px(t))}" y="{height - bottom + 16}" '
                     f'{_FONT} text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(f'<text x="{left - 6}" y="{_fmt(py(t) + 4)}" {_FONT} '
                     f'text-anchor="end">{t:.4g}</text>')
    parts.append(f'<text x="{(left + width - right) // 2}" '
                 f'y="{height - 10}" {_FONT} text-anchor="middle">{x_label}'
                 f'</text>')
    parts.append(f'<text x="14" y="{top - 8}" {_FONT}>{y_label}</text>')
    for n, (label, xs, ys) in enumerate(series):
        color = colors[n % len(colors)]
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}"
                          for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{points}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        if markers:
            for x, y in zip(xs, ys):
                parts.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" '
                             f'r="3" fill="{color}"/>')
        parts.append(f'<text x="{width - right + 8}" y="{top + 14 + 16 * n}" '
                     f'{_FONT} fill="{color}">{label}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
