"""CSV traces and SVG charts for experiment runs.

The CSV layout is '#'-prefixed metadata lines, one header line, then data
rows. Floats are printed with 17 significant digits so the data section of
a rerun with the same configuration and seed is byte-identical; anything
run-dependent (timestamps, wall times) belongs in the metadata lines only.
"""

from __future__ import annotations

import html
import math
from pathlib import Path

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def format_value(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, columns, metadata=None) -> None:
    """Write named columns; `columns` is a list of (name, array) pairs."""
    names = [name for name, _ in columns]
    arrays = [np.asarray(arr) for _, arr in columns]
    if len({a.shape[0] for a in arrays}) > 1:
        raise ValueError("columns differ in length")
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key} = {value}")
    lines.append(",".join(names))
    for row in range(arrays[0].shape[0] if arrays else 0):
        lines.append(",".join(format_value(a[row]) for a in arrays))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Returns (metadata dict, columns dict); numeric columns become float arrays."""
    metadata = {}
    header = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                metadata[key.strip()] = value.strip()
            continue
        if header is None:
            header = [h.strip() for h in line.split(",")]
            continue
        rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: no header line found")
    columns = {}
    for j, name in enumerate(header):
        raw = [r[j] if j < len(r) else "" for r in rows]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw, dtype=object)
    return metadata, columns


def rolling_mean(values, window: int) -> np.ndarray:
    """Trailing mean over up to `window` points; input must be nan-free."""
    if window < 1:
        raise ValueError("window must be positive")
    v = np.asarray(values, dtype=np.float64)
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(v.size)
    lo = np.maximum(0, idx - window + 1)
    return (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)


def nanmean_stack(arrays) -> np.ndarray:
    """Elementwise mean across equally-long arrays, ignoring non-finite entries."""
    stack = np.vstack([np.asarray(a, dtype=np.float64) for a in arrays])
    mask = np.isfinite(stack)
    counts = mask.sum(axis=0)
    sums = np.where(mask, stack, 0.0).sum(axis=0)
    return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def nice_ticks(lo: float, hi: float, target: int = 6) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = 10.0 * mag
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if (hi - lo) / (mult * mag) <= target:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    return np.arange(start, hi + step * 1e-9, step)


def _tick_label(v: float) -> str:
    return format(round(v, 10), ".6g")


def render_line_chart(series, hlines=(), title="", xlabel="", ylabel="",
                      width=860, height=520) -> str:
    """Standalone SVG line chart; output is a pure function of the inputs.

    `series` is a list of dicts with keys x, y, label and optional color,
    stroke_width, dash, opacity. `hlines` holds (value, label) pairs drawn
    as dashed horizontal rules.
    """
    ml, mr, mt, mb = 72, 24, 46, 58
    pw, ph = width - ml - mr, height - mt - mb

    xs, ys = [], []
    for s in series:
        x = np.asarray(s["x"], dtype=np.float64)
        y = np.asarray(s["y"], dtype=np.float64)
        keep = np.isfinite(x) & np.isfinite(y)
        xs.append(x[keep])
        ys.append(y[keep])
    all_x = np.concatenate(xs) if xs else np.array([0.0])
    all_y = np.concatenate([*ys, np.asarray([v for v, _ in hlines], dtype=np.float64)]) \
        if (ys or hlines) else np.array([0.0])
    if all_x.size == 0:
        all_x = np.array([0.0])
    if all_y.size == 0:
        all_y = np.array([0.0])

    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x1 <= x0:
        x0, x1 = x0 - 0.5, x0 + 0.5
    if y1 <= y0:
        y0, y1 = y0 - 0.5, y0 + 0.5
    ypad = 0.04 * (y1 - y0)
    y0, y1 = y0 - ypad, y1 + ypad

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica,Arial,sans-serif">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(f'<text x="{width / 2:.1f}" y="26" text-anchor="middle" '
                     f'font-size="16" fill="#222222">{html.escape(title)}</text>')

    for tx in nice_ticks(x0, x1):
        X = px(tx)
        parts.append(f'<line x1="{X:.2f}" y1="{mt}" x2="{X:.2f}" y2="{mt + ph}" '
                     f'stroke="#e5e5e5" stroke-width="1"/>')
        parts.append(f'<text x="{X:.2f}" y="{mt + ph + 20}" text-anchor="middle" '
                     f'font-size="12" fill="#444444">{_tick_label(tx)}</text>')
    for ty in nice_ticks(y0, y1):
        Y = py(ty)
        parts.append(f'<line x1="{ml}" y1="{Y:.2f}" x2="{ml + pw}" y2="{Y:.2f}" '
                     f'stroke="#e5e5e5" stroke-width="1"/>')
        parts.append(f'<text x="{ml - 8}" y="{Y + 4:.2f}" text-anchor="end" '
                     f'font-size="12" fill="#444444">{_tick_label(ty)}</text>')

    parts.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
                 f'fill="none" stroke="#888888" stroke-width="1"/>')

    for value, label in hlines:
        Y = py(float(value))
        parts.append(f'<line x1="{ml}" y1="{Y:.2f}" x2="{ml + pw}" y2="{Y:.2f}" '
                     f'stroke="#555555" stroke-width="1.5" stroke-dasharray="7,5"/>')
        if label:
            parts.append(f'<text x="{ml + 6}" y="{Y - 5:.2f}" font-size="12" '
                         f'fill="#555555">{html.escape(label)}</text>')

    legend_entries = []
    for i, (s, x, y) in enumerate(zip(series, xs, ys)):
        if x.size == 0:
            continue
        color = s.get("color", PALETTE[i % len(PALETTE)])
        sw = s.get("stroke_width", 1.6)
        dash = f' stroke-dasharray="{s["dash"]}"' if s.get("dash") else ""
        opacity = f' stroke-opacity="{s["opacity"]}"' if s.get("opacity") else ""
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="{sw}"{dash}{opacity}/>')
        if s.get("label"):
            legend_entries.append((s["label"], color))

    for i, (label, color) in enumerate(legend_entries):
        Y = mt + 14 + 18 * i
        X = ml + pw - 170
        parts.append(f'<line x1="{X}" y1="{Y - 4}" x2="{X + 22}" y2="{Y - 4}" '
                     f'stroke="{color}" stroke-width="2.5"/>')
        parts.append(f'<text x="{X + 28}" y="{Y}" font-size="12" '
                     f'fill="#222222">{html.escape(label)}</text>')

    if xlabel:
        parts.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 14}" text-anchor="middle" '
                     f'font-size="13" fill="#222222">{html.escape(xlabel)}</text>')
    if ylabel:
        parts.append(f'<text x="20" y="{mt + ph / 2:.1f}" text-anchor="middle" '
                     f'font-size="13" fill="#222222" '
                     f'transform="rotate(-90 20 {mt + ph / 2:.1f})">{html.escape(ylabel)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
