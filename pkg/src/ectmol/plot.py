"""Deterministic SVG renderings of ECCs and ECT grids.

Output is plain text with fixed-precision coordinates, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import numpy as np

_MARGIN = 40


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def ecc_svg(thresholds, ecc, title: str = "", width: int = 480, height: int = 320) -> str:
    """Step curve of one ECC: thresholds on x, Euler characteristic on y.

    The value at threshold ``t_i`` is held until ``t_{i+1}``; the last step is
    drawn half a grid spacing wide.
    """
    t = np.asarray(thresholds, dtype=np.float64)
    chi = np.asarray(ecc, dtype=np.int64)
    if t.size != chi.size or t.size == 0:
        raise ValueError("thresholds and ECC must have the same non-zero length")
    step = (t[-1] - t[0]) / (t.size - 1) if t.size > 1 else 1.0
    x_lo, x_hi = t[0], t[-1] + step / 2
    y_lo, y_hi = min(0, int(chi.min())), max(1, int(chi.max()))
    pw, ph = width - 2 * _MARGIN, height - 2 * _MARGIN

    def sx(x: float) -> float:
        return _MARGIN + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y: float) -> float:
        return height - _MARGIN - (y - y_lo) / (y_hi - y_lo) * ph

    points = []
    for i, (ti, ci) in enumerate(zip(t, chi)):
        x_next = t[i + 1] if i + 1 < t.size else x_hi
        points.append(f"{_fmt(sx(ti))},{_fmt(sy(ci))}")
        points.append(f"{_fmt(sx(x_next))},{_fmt(sy(ci))}")
    values = " ".join(str(int(c)) for c in chi)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line class="axis" x1="{_MARGIN}" y1="{height - _MARGIN}" '
        f'x2="{width - _MARGIN}" y2="{height - _MARGIN}" stroke="black"/>',
        f'<line class="axis" x1="{_MARGIN}" y1="{_MARGIN}" '
        f'x2="{_MARGIN}" y2="{height - _MARGIN}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 8}" text-anchor="middle" '
        f'font-size="12">threshold</text>',
        f'<text x="12" y="{height // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 12 {height // 2})">Euler characteristic</text>',
        f'<text x="{_MARGIN - 4}" y="{_fmt(sy(y_lo) + 4)}" text-anchor="end" '
        f'font-size="10">{y_lo}</text>',
        f'<text x="{_MARGIN - 4}" y="{_fmt(sy(y_hi) + 4)}" text-anchor="end" '
        f'font-size="10">{y_hi}</text>',
        f'<polyline class="ecc" data-values="{values}" fill="none" stroke="black" '
        f'stroke-width="2" points="{" ".join(points)}"/>',
    ]
    if title:
        lines.append(f'<text x="{width // 2}" y="20" text-anchor="middle" '
                     f'font-size="14">{_escape(title)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def ect_heatmap_svg(grid, title: str = "", cell: int = 12) -> str:
    """ECT as an image: one column per direction, one row per threshold
    (lowest threshold at the bottom), gray level linear from min to max χ."""
    g = np.asarray(grid, dtype=np.int64)
    if g.ndim != 2 or g.size == 0:
        raise ValueError("ECT grid must be a non-empty (D, T) array")
    D, T = g.shape
    lo, hi = int(g.min()), int(g.max())
    top = 30 if title else 10
    width = 2 * 10 + D * cell
    height = top + 10 + T * cell
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" data-min="{lo}" data-max="{hi}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        lines.append(f'<text x="{width // 2}" y="20" text-anchor="middle" '
                     f'font-size="14">{_escape(title)}</text>')
    for d in range(D):
        for t in range(T):
            v = int(g[d, t])
            level = 0 if hi == lo else round(255 * (v - lo) / (hi - lo))
            x = 10 + d * cell
            y = top + (T - 1 - t) * cell
            lines.append(
                f'<rect class="cell" data-direction="{d}" data-threshold="{t}" '
                f'data-chi="{v}" x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({level},{level},{level})"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))
