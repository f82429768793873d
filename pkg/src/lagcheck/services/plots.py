"""
Pictures of the scaled roots x/n against the limit curve |z exp(1 - z)| = 1.
"""
from __future__ import annotations

import os
from typing import List, Sequence

import numpy as np
import plotly.graph_objects as go

from .expsum import SzegoSample
from .settings import _dbg

SIZE = 640
EXTENT = 1.25
PALETTE = ("#1d4ed8", "#2b8a3e", "#c2410c", "#7c3aed", "#be123c", "#0f766e")


def _px(x: float) -> str:
    return f"{(x + EXTENT) / (2 * EXTENT) * SIZE:.3f}"


def _py(y: float) -> str:
    return f"{(EXTENT - y) / (2 * EXTENT) * SIZE:.3f}"


def szego_svg(samples: Sequence[SzegoSample], curve: np.ndarray) -> str:
    """
    Static SVG: unit circle, limit curve, one colour per n. Coordinates are
    printed with three decimals so equal inputs give equal bytes.
    """
    lines: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff" />',
        f'<line x1="{_px(-EXTENT)}" y1="{_py(0)}" x2="{_px(EXTENT)}" y2="{_py(0)}" stroke="#cccccc" stroke-width="1" />',
        f'<line x1="{_px(0)}" y1="{_py(-EXTENT)}" x2="{_px(0)}" y2="{_py(EXTENT)}" stroke="#cccccc" stroke-width="1" />',
        f'<circle cx="{_px(0)}" cy="{_py(0)}" r="{SIZE / (2 * EXTENT):.3f}" fill="none" stroke="#999999" '
        f'stroke-dasharray="4 4" stroke-width="1" />',
    ]

    ring = list(curve) + [curve[0]]
    points = " ".join(f"{_px(z.real)},{_py(z.imag)}" for z in ring)
    lines.append(f'<polyline points="{points}" fill="none" stroke="#111111" stroke-width="1.5" />')

    for i, sample in enumerate(samples):
        colour = PALETTE[i % len(PALETTE)]
        for z in sample.scaled_roots:
            lines.append(f'<circle cx="{_px(z.real)}" cy="{_py(z.imag)}" r="3" fill="{colour}" />')
        lines.append(
            f'<text x="12" y="{20 + 16 * i}" font-family="monospace" font-size="12" fill="{colour}">'
            f"n={sample.n} max distance {sample.max_distance:.3e}</text>"
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def roots_animation_html(samples: Sequence[SzegoSample], curve: np.ndarray, out_path: str) -> str:
    """Interactive HTML with one slider step per n."""
    if os.path.dirname(out_path):
        os.makedirs(os.path.dirname(out_path), exist_ok=True)
    ring = np.append(curve, curve[0])
    curve_trace = go.Scatter(x=ring.real, y=ring.imag, mode="lines", line=dict(width=1, color="#111111"),
                             hoverinfo="none", name="limit curve")

    def roots_trace(sample: SzegoSample) -> go.Scatter:
        z = np.array(sample.scaled_roots)
        return go.Scatter(x=z.real, y=z.imag, mode="markers", marker=dict(size=7, color="#1d4ed8"),
                          name=f"n={sample.n}")

    if not samples:
        fig = go.Figure(data=[curve_trace])
        fig.update_layout(title="Scaled roots (empty)", showlegend=False)
        fig.write_html(out_path, include_plotlyjs="cdn")
        return out_path

    frames = [go.Frame(data=[curve_trace, roots_trace(s)], name=str(s.n)) for s in samples]
    steps = [
        dict(method="animate", label=str(s.n),
             args=[[str(s.n)], dict(mode="immediate", frame=dict(duration=0, redraw=True))])
        for s in samples
    ]
    fig = go.Figure(data=[curve_trace, roots_trace(samples[0])], frames=frames)
    fig.update_layout(
        title="Roots of e_n(x), scaled by n",
        showlegend=False,
        margin=dict(l=10, r=10, t=40, b=10),
        xaxis=dict(range=[-EXTENT, EXTENT], zeroline=True),
        yaxis=dict(range=[-EXTENT, EXTENT], zeroline=True, scaleanchor="x"),
        sliders=[dict(active=0, currentvalue=dict(prefix="n = "), steps=steps)],
    )
    fig.write_html(out_path, include_plotlyjs="cdn")
    _dbg(f"[debug] wrote animation with {len(frames)} frames to {out_path}")
    return out_path
