"""Minimal deterministic SVG charts for run artifacts.

Two chart kinds cover every report: a line with a shaded uncertainty band
(per-time ensemble means) and an overlay of empirical CDF steps (crossing
angle samples).  No plotting dependency: the emitters write plain SVG with
fixed-precision coordinates, so identical data yields identical bytes.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError

__all__ = ["band_chart_svg", "cdf_overlay_svg"]

_W, _H = 720, 440
_ML, _MR, _MT, _MB = 72, 24, 40, 56  # margins
_COLORS = ("#1f6fb2", "#c24d2a", "#3a8a4d", "#7a4dc2")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi], deterministic."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ParameterError("axis range must be finite")
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _tick_label(t: float) -> str:
    if t == 0.0:
        return "0"
    if 1e-3 <= abs(t) < 1e5:
        s = f"{t:.6f}".rstrip("0").rstrip(".")
        return s
    return f"{t:.2e}"


class _Frame:
    """Maps data coordinates into the plot rectangle."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            pad = abs(y_lo) * 0.1 + 1e-12
            y_lo, y_hi = y_lo - pad, y_lo + pad
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi

    def x(self, v: float) -> float:
        span = self.x_hi - self.x_lo
        return _ML + (v - self.x_lo) / span * (_W - _ML - _MR)

    def y(self, v: float) -> float:
        span = self.y_hi - self.y_lo
        return _H - _MB - (v - self.y_lo) / span * (_H - _MT - _MB)

    def polyline(self, xs, ys) -> str:
        return " ".join(
            f"{_fmt(self.x(a))},{_fmt(self.y(b))}" for a, b in zip(xs, ys)
        )


def _axes(frame: _Frame, title: str, x_label: str, y_label: str) -> list[str]:
    parts = [
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
        f'height="{_H - _MT - _MB}" fill="none" stroke="#444" '
        'stroke-width="1"/>'
    ]
    for t in _ticks(frame.x_lo, frame.x_hi):
        px = _fmt(frame.x(t))
        parts.append(
            f'<line x1="{px}" y1="{_H - _MB}" x2="{px}" y2="{_H - _MB + 5}" '
            'stroke="#444"/>'
        )
        parts.append(
            f'<text x="{px}" y="{_H - _MB + 20}" font-size="12" '
            f'text-anchor="middle">{_tick_label(t)}</text>'
        )
    for t in _ticks(frame.y_lo, frame.y_hi):
        py = _fmt(frame.y(t))
        parts.append(
            f'<line x1="{_ML - 5}" y1="{py}" x2="{_ML}" y2="{py}" '
            'stroke="#444"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{py}" font-size="12" text-anchor="end" '
            f'dominant-baseline="middle">{_tick_label(t)}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="24" font-size="15" '
        f'text-anchor="middle" font-weight="bold">{title}</text>'
    )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 14}" font-size="13" '
        f'text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="18" y="{(_MT + _H - _MB) / 2:.1f}" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 18 '
        f'{(_MT + _H - _MB) / 2:.1f})">{y_label}</text>'
    )
    return parts


def _document(parts: list[str]) -> str:
    body = "\n".join(parts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
        f'height="{_H}" viewBox="0 0 {_W} {_H}">\n'
        '<rect width="100%" height="100%" fill="white"/>\n'
        f"{body}\n</svg>\n"
    )


def band_chart_svg(
    x,
    mean,
    half_width,
    *,
    title: str,
    x_label: str = "t",
    y_label: str = "mean",
    reference: float | None = 1.0,
) -> str:
    """Line chart of ``mean`` over ``x`` with a shaded ±``half_width`` band."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(mean, dtype=float)
    h = np.asarray(half_width, dtype=float)
    if not (x.shape == m.shape == h.shape) or x.ndim != 1 or x.size < 2:
        raise ParameterError("x, mean, half_width must be equal-length 1-d")
    lo, hi = m - h, m + h
    y_lo = float(min(lo.min(), reference if reference is not None else lo.min()))
    y_hi = float(max(hi.max(), reference if reference is not None else hi.max()))
    pad = 0.08 * (y_hi - y_lo + 1e-30)
    frame = _Frame(float(x[0]), float(x[-1]), y_lo - pad, y_hi + pad)
    parts = _axes(frame, title, x_label, y_label)
    band = (
        frame.polyline(x, hi)
        + " "
        + frame.polyline(x[::-1], lo[::-1])
    )
    parts.append(
        f'<polygon points="{band}" fill="{_COLORS[0]}" fill-opacity="0.18" '
        'stroke="none"/>'
    )
    if reference is not None:
        py = _fmt(frame.y(reference))
        parts.append(
            f'<line x1="{_ML}" y1="{py}" x2="{_W - _MR}" y2="{py}" '
            'stroke="#888" stroke-dasharray="5,4"/>'
        )
    parts.append(
        f'<polyline points="{frame.polyline(x, m)}" fill="none" '
        f'stroke="{_COLORS[0]}" stroke-width="1.8"/>'
    )
    return _document(parts)


def cdf_overlay_svg(
    samples: dict,
    *,
    title: str,
    x_label: str = "angle (radians)",
) -> str:
    """Overlayed empirical CDF step functions, one per labeled sample set."""
    if not samples or len(samples) > len(_COLORS):
        raise ParameterError(
            f"need 1..{len(_COLORS)} labeled sample sets, got {len(samples)}"
        )
    arrays = {}
    x_lo, x_hi = math.inf, -math.inf
    for label, vals in samples.items():
        v = np.sort(np.asarray(vals, dtype=float))
        if v.size == 0:
            raise ParameterError(f"sample set {label!r} is empty")
        arrays[label] = v
        x_lo = min(x_lo, float(v[0]))
        x_hi = max(x_hi, float(v[-1]))
    span = x_hi - x_lo + 1e-30
    frame = _Frame(x_lo - 0.04 * span, x_hi + 0.04 * span, 0.0, 1.0)
    parts = _axes(frame, title, x_label, "empirical CDF")
    for i, (label, v) in enumerate(arrays.items()):
        n = v.size
        xs = np.concatenate(([frame.x_lo], np.repeat(v, 2), [frame.x_hi]))
        ys = np.concatenate(
            ([0.0], np.repeat(np.arange(n + 1) / n, 2)[1:-1], [1.0])
        )
        parts.append(
            f'<polyline points="{frame.polyline(xs, ys)}" fill="none" '
            f'stroke="{_COLORS[i]}" stroke-width="1.6"/>'
        )
        y_leg = _MT + 18 + 18 * i
        parts.append(
            f'<line x1="{_W - _MR - 150}" y1="{y_leg}" '
            f'x2="{_W - _MR - 122}" y2="{y_leg}" stroke="{_COLORS[i]}" '
            'stroke-width="3"/>'
        )
        parts.append(
            f'<text x="{_W - _MR - 114}" y="{y_leg + 4}" font-size="12">'
            f"{label} (n={n})</text>"
        )
    return _document(parts)
