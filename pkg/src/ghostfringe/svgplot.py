"""Minimal self-contained SVG rendering for run outputs.

Keeps plotting dependency-free so emitted figures are byte-reproducible.
Data points are drawn as open circles, the model as a solid line.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["render_overlay"]

_W, _H = 900, 560
_ML, _MR, _MT, _MB = 80, 25, 45, 60


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not np.isfinite(lo) or not np.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = np.ceil(lo / step) * step
    ticks = np.arange(first, hi + step / 2, step)
    return [float(t) for t in ticks]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) < 1e-3 or abs(v) >= 1e4:
        return f"{v:.2e}"
    return f"{v:.4g}"


def render_overlay(
    path: Path | str,
    x: np.ndarray,
    data: np.ndarray | None,
    model: np.ndarray | None,
    title: str,
    xlabel: str = "x (m)",
    ylabel: str = "g2",
    max_markers: int = 300,
) -> None:
    """Write an SVG overlay of measured points and a model curve."""
    x = np.asarray(x, dtype=float)
    series = [s for s in (data, model) if s is not None]
    finite = np.concatenate([s[np.isfinite(s)] for s in series]) if series else np.array([0.0])
    ylo, yhi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if yhi <= ylo:
        yhi = ylo + 1.0
    pad = 0.06 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    xlo, xhi = float(x.min()), float(x.max())

    px_w = _W - _ML - _MR
    px_h = _H - _MT - _MB

    def sx(v):
        return _ML + (v - xlo) / (xhi - xlo) * px_w

    def sy(v):
        return _MT + (yhi - v) / (yhi - ylo) * px_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
    ]
    # frame and ticks
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{px_w}" height="{px_h}" fill="none" '
        f'stroke="black" stroke-width="1"/>'
    )
    for t in _nice_ticks(xlo, xhi):
        parts.append(
            f'<line x1="{sx(t):.1f}" y1="{_MT + px_h}" x2="{sx(t):.1f}" '
            f'y2="{_MT + px_h + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{sx(t):.1f}" y="{_MT + px_h + 20}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{_fmt(t)}</text>'
        )
    for t in _nice_ticks(ylo, yhi):
        parts.append(
            f'<line x1="{_ML - 5}" y1="{sy(t):.1f}" x2="{_ML}" y2="{sy(t):.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{sy(t) + 4:.1f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{_fmt(t)}</text>'
        )
    parts.append(
        f'<text x="{_ML + px_w / 2:.0f}" y="{_H - 18}" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif">{xlabel}</text>'
    )
    parts.append(
        f'<text x="22" y="{_MT + px_h / 2:.0f}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif" transform="rotate(-90 22 {_MT + px_h / 2:.0f})">{ylabel}</text>'
    )

    if model is not None:
        pts = [
            f"{sx(xv):.2f},{sy(yv):.2f}"
            for xv, yv in zip(x, model)
            if np.isfinite(yv)
        ]
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="#c22" stroke-width="1.6"/>'
        )
    if data is not None:
        stride = max(1, x.size // max_markers)
        for xv, yv in zip(x[::stride], data[::stride]):
            if np.isfinite(yv):
                parts.append(
                    f'<circle cx="{sx(xv):.2f}" cy="{sy(yv):.2f}" r="2.4" fill="none" '
                    f'stroke="#1a5" stroke-width="1.1"/>'
                )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
