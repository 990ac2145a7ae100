"""Tiny deterministic SVG emitters for batch reports: line charts, band
diagrams, and heat maps.  No plotting dependency; output strings are stable
across runs for byte-identical artifacts."""

from __future__ import annotations

import math

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 60, 20, 30, 45
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _scale(lo: float, hi: float):
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def _ticks(lo: float, hi: float, count: int = 5):
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def line_chart(path: str, xs, series, title: str = "",
               xlabel: str = "", ylabel: str = "") -> None:
    """series: list of (label, ys) pairs over the common xs."""
    xs = [float(x) for x in xs]
    xlo, xhi = _scale(min(xs), max(xs))
    all_y = [float(y) for _, ys in series for y in ys if math.isfinite(y)]
    ylo, yhi = _scale(min(all_y, default=0.0), max(all_y, default=1.0))
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def px(x):
        return _ML + (_W - _ML - _MR) * (x - xlo) / (xhi - xlo)

    def py(y):
        return _H - _MB - (_H - _MT - _MB) * (y - ylo) / (yhi - ylo)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W//2}" y="18" text-anchor="middle" font-size="13">{title}</text>']
    for tx in _ticks(xlo, xhi):
        parts.append(f'<line x1="{px(tx):.1f}" y1="{_H-_MB}" x2="{px(tx):.1f}" '
                     f'y2="{_H-_MB+4}" stroke="black"/>')
        parts.append(f'<text x="{px(tx):.1f}" y="{_H-_MB+16}" text-anchor="middle">{_fmt(tx)}</text>')
    for ty in _ticks(ylo, yhi):
        parts.append(f'<line x1="{_ML-4}" y1="{py(ty):.1f}" x2="{_ML}" y2="{py(ty):.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML-8}" y="{py(ty)+4:.1f}" text-anchor="end">{_fmt(ty)}</text>')
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
                 f'fill="none" stroke="black"/>')
    for i, (label, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{px(x):.1f},{py(float(y)):.1f}" for x, y in zip(xs, ys)
                       if math.isfinite(float(y)))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{_W-_MR-6}" y="{_MT+14+14*i}" text-anchor="end" '
                     f'fill="{color}">{label}</text>')
    parts.append(f'<text x="{_W//2}" y="{_H-8}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="14" y="{_H//2}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {_H//2})">{ylabel}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def band_diagram(path: str, bands, title: str = "") -> None:
    """bands: list of (left, right) energy intervals drawn on a line."""
    lo = min(b[0] for b in bands)
    hi = max(b[1] for b in bands)
    span = (hi - lo) or 1.0
    lo, hi = lo - 0.05 * span, hi + 0.05 * span

    def px(x):
        return _ML + (_W - _ML - _MR) * (x - lo) / (hi - lo)

    y0 = _H // 2
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W//2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
             f'<line x1="{_ML}" y1="{y0}" x2="{_W-_MR}" y2="{y0}" stroke="black"/>']
    for i, (a, b) in enumerate(bands):
        parts.append(f'<rect x="{px(a):.1f}" y="{y0-12}" width="{max(px(b)-px(a), 1.0):.1f}" '
                     f'height="24" fill="#1f77b4" fill-opacity="0.7"/>')
        parts.append(f'<text x="{px((a+b)/2):.1f}" y="{y0-18}" text-anchor="middle">{i}</text>')
    for tx in _ticks(lo, hi):
        parts.append(f'<line x1="{px(tx):.1f}" y1="{y0+14}" x2="{px(tx):.1f}" y2="{y0+20}" stroke="black"/>')
        parts.append(f'<text x="{px(tx):.1f}" y="{y0+34}" text-anchor="middle">{_fmt(tx)}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def heatmap(path: str, matrix, x_extent, y_extent, title: str = "",
            xlabel: str = "", ylabel: str = "") -> None:
    """matrix[i][j]: value at row i (y), column j (x); simple blue-red ramp."""
    rows = len(matrix)
    cols = len(matrix[0])
    finite = [v for row in matrix for v in row if math.isfinite(v)]
    vlo, vhi = _scale(min(finite, default=0.0), max(finite, default=1.0))
    plot_w, plot_h = _W - _ML - _MR, _H - _MT - _MB

    def color(v):
        t = (v - vlo) / (vhi - vlo)
        t = min(max(t, 0.0), 1.0)
        r = int(255 * t)
        b = int(255 * (1.0 - t))
        return f"rgb({r},60,{b})"

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W//2}" y="18" text-anchor="middle" font-size="13">{title}</text>']
    cw = plot_w / cols
    ch = plot_h / rows
    for i in range(rows):
        for j in range(cols):
            x = _ML + j * cw
            y = _H - _MB - (i + 1) * ch
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw+0.5:.1f}" '
                         f'height="{ch+0.5:.1f}" fill="{color(float(matrix[i][j]))}"/>')
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{plot_w}" height="{plot_h}" '
                 f'fill="none" stroke="black"/>')
    for frac, val in ((0.0, x_extent[0]), (1.0, x_extent[1])):
        parts.append(f'<text x="{_ML + frac*plot_w:.1f}" y="{_H-_MB+16}" '
                     f'text-anchor="middle">{_fmt(val)}</text>')
    for frac, val in ((0.0, y_extent[0]), (1.0, y_extent[1])):
        parts.append(f'<text x="{_ML-8}" y="{_H-_MB - frac*plot_h + 4:.1f}" '
                     f'text-anchor="end">{_fmt(val)}</text>')
    parts.append(f'<text x="{_W//2}" y="{_H-8}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="14" y="{_H//2}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {_H//2})">{ylabel}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
