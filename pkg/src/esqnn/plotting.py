"""CSV and SVG output for experiment results.

SVGs are written by hand rather than through a plotting library so the
output stays small and byte-stable across library versions:
each series is one ``<polyline>``, each min/max band one translucent
``<polygon>``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def emit_csv(records: Sequence, path, columns: Sequence[str]) -> Path:
    """Write ``records`` (dicts keyed by column, or row sequences) under a header row.

    Floats are written with ``repr`` so reading them back gives the same
    values bit for bit.
    """
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for rec in records:
                row = [rec[c] for c in columns] if isinstance(rec, dict) else list(rec)
                if len(row) != len(columns):
                    raise ValueError(f"record has {len(row)} fields, expected {len(columns)}")
                writer.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> list[dict]:
    """Read a CSV written by ``emit_csv``; numeric fields come back as int or float."""

    def convert(text):
        for kind in (int, float):
            try:
                return kind(text)
            except ValueError:
                pass
        return text

    with Path(path).open(newline="") as fh:
        return [{k: convert(v) for k, v in row.items()} for row in csv.DictReader(fh)]


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    low: Sequence[float] | None = None
    high: Sequence[float] | None = None


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def _fmt(v):
    return f"{v:.4g}"


def emit_svg(
    series: Sequence[Series],
    path,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    width: int = 640,
    height: int = 400,
) -> Path:
    """Line plot with axes, tick labels, a legend and optional min/max bands.

    Non-finite points are dropped. A series with a single point still gets a
    one-vertex polyline so the point is present in the file.
    """
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom

    xs, ys = [], []
    for s in series:
        for seq in (s.y, s.low or [], s.high or []):
            ys += [v for v in seq if math.isfinite(v)]
        xs += [v for v in s.x if math.isfinite(v)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        out.append(f'<text x="{px(v):.1f}" y="{top + ph + 15}" text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<text x="{left - 5}" y="{py(v) + 4:.1f}" text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="15" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 15 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )

    for k, s in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        if s.low is not None and s.high is not None:
            band = [(x, lo, hi) for x, lo, hi in zip(s.x, s.low, s.high) if all(map(math.isfinite, (x, lo, hi)))]
            if band:
                upper = [f"{px(x):.2f},{py(hi):.2f}" for x, _, hi in band]
                lower = [f"{px(x):.2f},{py(lo):.2f}" for x, lo, _ in reversed(band)]
                out.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        pts = [f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.x, s.y) if math.isfinite(x) and math.isfinite(y)]
        if pts:
            out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 15 * k + 5
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>")

    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
