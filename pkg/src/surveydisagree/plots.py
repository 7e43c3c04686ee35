"""Minimal static SVG charts (no plotting backend needed)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 360
PAD_L, PAD_R, PAD_T, PAD_B = 60, 20, 40, 40
COLORS = ("#1f4e79", "#b03a2e", "#117a65", "#7d3c98")


def _scale(lo, hi, out_lo, out_hi):
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    return lambda v: out_lo + (v - lo) * (out_hi - out_lo) / (hi - lo)


def _frame(title: str, body: list[str], ylo: float, yhi: float, sy) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{H - PAD_B}" stroke="black"/>',
    ]
    for v in (ylo, 0.5 * (ylo + yhi), yhi):
        parts.append(
            f'<text x="{PAD_L - 6}" y="{sy(v) + 4:.1f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10">{v:.3g}</text>'
        )
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def correlogram_svg(lags, values, title: str) -> str:
    lags = list(lags)
    values = np.asarray(values, dtype=float)
    sx = _scale(min(lags) - 0.5, max(lags) + 0.5, PAD_L, W - PAD_R)
    sy = _scale(-1.0, 1.0, H - PAD_B, PAD_T)
    bw = max(1.0, (W - PAD_L - PAD_R) / (len(lags) + 1) * 0.7)
    body = [f'<line x1="{PAD_L}" y1="{sy(0):.1f}" x2="{W - PAD_R}" y2="{sy(0):.1f}" stroke="black"/>']
    for k, v in zip(lags, values):
        top, bottom = sorted((sy(v), sy(0.0)))
        body.append(
            f'<rect x="{sx(k) - bw / 2:.1f}" y="{top:.1f}" width="{bw:.1f}" height="{bottom - top:.1f}" '
            f'fill="{COLORS[0]}"/>'
        )
        if k % 3 == 0:
            body.append(
                f'<text x="{sx(k):.1f}" y="{H - PAD_B + 14}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="10">{k}</text>'
            )
    return _frame(title, body, -1.0, 1.0, sy)


def irf_svg(curves, title: str) -> str:
    """``curves`` is a list of (label, point, lower, upper) arrays over h = 0..H."""
    allv = np.concatenate([np.concatenate([c[1], c[2], c[3]]) for c in curves])
    ylo, yhi = float(allv.min()), float(allv.max())
    if ylo == yhi:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    horizon = len(curves[0][1]) - 1
    sx = _scale(0, max(horizon, 1), PAD_L, W - PAD_R)
    sy = _scale(ylo, yhi, H - PAD_B, PAD_T)
    body = []
    if ylo < 0 < yhi:
        body.append(f'<line x1="{PAD_L}" y1="{sy(0):.1f}" x2="{W - PAD_R}" y2="{sy(0):.1f}" stroke="grey"/>')
    for i, (label, point, lower, upper) in enumerate(curves):
        color = COLORS[i % len(COLORS)]
        hs = range(len(point))
        band = [f"{sx(h):.1f},{sy(v):.1f}" for h, v in zip(hs, upper)]
        band += [f"{sx(h):.1f},{sy(v):.1f}" for h, v in reversed(list(zip(hs, lower)))]
        body.append(f'<polygon points="{" ".join(band)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{sx(h):.1f},{sy(v):.1f}" for h, v in zip(hs, point))
        body.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        body.append(
            f'<text x="{W - PAD_R - 4}" y="{PAD_T + 14 * (i + 1)}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11" fill="{color}">{escape(label)}</text>'
        )
    for h in range(0, horizon + 1, 6):
        body.append(
            f'<text x="{sx(h):.1f}" y="{H - PAD_B + 14}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="10">{h}</text>'
        )
    return _frame(title, body, ylo, yhi, sy)
