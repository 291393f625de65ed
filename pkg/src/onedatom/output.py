"""CSV and SVG emission.

CSV is the canonical output (RFC-4180 quoting, fixed "%.12g" number
formatting so identical runs are byte-identical); SVG charts are derived,
regenerable, and drawn directly as polylines to keep the package free of
plotting dependencies.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

_PALETTE = ("#1f6eb4", "#d34e24", "#2e8b57", "#8a2be2", "#b8860b", "#444444")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    xf = float(x)
    if math.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    if math.isnan(xf):
        return "nan"
    return f"{xf:.12g}"


def write_csv(path, columns: dict[str, np.ndarray], comments: dict | None = None) -> None:
    """Write named columns; comment lines (# key=value) precede the header."""
    path = Path(path)
    names = list(columns)
    length = len(next(iter(columns.values())))
    for k, v in columns.items():
        if len(v) != length:
            raise ValueError(f"column {k!r} has length {len(v)}, expected {length}")
    with open(path, "w", newline="") as fh:
        if comments:
            for k, v in comments.items():
                fh.write(f"# {k}={_fmt(v)}\n")
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(names)
        for i in range(length):
            writer.writerow([_fmt(columns[k][i]) for k in names])


def read_csv(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Read back a file produced by :func:`write_csv`."""
    comments: dict[str, str] = {}
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        data_lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                comments[key.strip()] = val
            else:
                data_lines.append(line)
        rows = list(csv.reader(data_lines))
    header, body = rows[0], rows[1:]
    cols = {
        name: np.array([float(r[i]) for r in body])
        for i, name in enumerate(header)
    }
    return comments, cols


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def svg_line_chart(path, series, title: str = "", xlabel: str = "", ylabel: str = "",
                   width: int = 760, height: int = 520, annotations=()) -> None:
    """Minimal SVG 1.1 line chart.

    ``series`` is a list of (label, x, y, style) with style "line" or
    "points"; ``annotations`` are free-text lines drawn below the title.
    """
    ml, mr, mt, mb = 72, 24, 48, 56
    pw, ph = width - ml - mr, height - mt - mb
    finite = lambda a: np.asarray(a, dtype=float)[np.isfinite(np.asarray(a, dtype=float))]
    xs = np.concatenate([finite(s[1]) for s in series if len(s[1])])
    ys = np.concatenate([finite(s[2]) for s in series if len(s[2])])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{escape(title)}</text>',
    ]
    for i, note in enumerate(annotations):
        parts.append(
            f'<text x="{ml}" y="{40 + 14 * i}" font-family="sans-serif" '
            f'font-size="11" fill="#555555">{escape(note)}</text>'
        )
    # axes
    parts.append(
        f'<path d="M {ml} {mt} L {ml} {mt + ph} L {ml + pw} {mt + ph}" '
        f'stroke="black" fill="none" stroke-width="1"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{sx(tx):.1f}" y1="{mt + ph}" x2="{sx(tx):.1f}" '
            f'y2="{mt + ph + 5}" stroke="black"/>'
            f'<text x="{sx(tx):.1f}" y="{mt + ph + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tx:.3g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{ml - 5}" y1="{sy(ty):.1f}" x2="{ml}" y2="{sy(ty):.1f}" '
            f'stroke="black"/>'
            f'<text x="{ml - 8}" y="{sy(ty) + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{ty:.3g}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{escape(xlabel)}</text>'
    )
    parts.append(
        f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (label, x, y, *style) in enumerate(series):
        colour = _PALETTE[i % len(_PALETTE)]
        kind = style[0] if style else "line"
        pts = [
            (sx(xi), sy(yi))
            for xi, yi in zip(np.asarray(x, float), np.asarray(y, float))
            if math.isfinite(xi) and math.isfinite(yi)
        ]
        if not pts:
            continue
        if kind == "points":
            for px, py in pts:
                parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3.5" '
                             f'fill="none" stroke="{colour}" stroke-width="1.5"/>')
        else:
            d = "M " + " L ".join(f"{px:.2f} {py:.2f}" for px, py in pts)
            parts.append(f'<path d="{d}" fill="none" stroke="{colour}" stroke-width="1.6"/>')
        ly = mt + 16 + 15 * i
        parts.append(
            f'<line x1="{ml + pw - 130}" y1="{ly - 4}" x2="{ml + pw - 104}" '
            f'y2="{ly - 4}" stroke="{colour}" stroke-width="2"/>'
            f'<text x="{ml + pw - 98}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{escape(str(label))}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
