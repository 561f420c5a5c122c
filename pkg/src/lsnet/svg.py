"""Minimal hand-written SVG scatter plot of posterior position draws."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def positions_svg(draws: np.ndarray, truth: np.ndarray | None = None, *, size: int = 480,
                  max_draws: int = 200, title: str = "posterior positions") -> str:
    """Render the first two coordinates of ``draws`` (shape ``(S, d, n)``).

    Draws are thinned evenly to at most ``max_draws``. Each node has its own
    colour; truth positions, when given, are drawn as black crosses labelled
    with the 1-based node index.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 3 or draws.shape[1] < 2:
        raise ValueError("draws must have shape (S, d, n) with d >= 2")
    if draws.shape[0] > max_draws:
        draws = draws[np.linspace(0, draws.shape[0] - 1, max_draws).astype(int)]
    pts = draws[:, :2, :]
    allx = [pts[:, 0].ravel()]
    ally = [pts[:, 1].ravel()]
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        allx.append(truth[0])
        ally.append(truth[1])
    xs, ys = np.concatenate(allx), np.concatenate(ally)
    lo = min(xs.min(), ys.min())
    hi = max(xs.max(), ys.max())
    span = hi - lo if hi > lo else 1.0
    pad = 30

    def sx(v):
        return pad + (v - lo) / span * (size - 2 * pad)

    def sy(v):
        return size - pad - (v - lo) / span * (size - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<text x="{size / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{escape(title)}</text>',
        f'<line x1="{sx(0):.2f}" y1="{pad}" x2="{sx(0):.2f}" y2="{size - pad}" stroke="#ccc"/>',
        f'<line x1="{pad}" y1="{sy(0):.2f}" x2="{size - pad}" y2="{sy(0):.2f}" stroke="#ccc"/>',
        '<g id="draws" fill-opacity="0.25">',
    ]
    n = pts.shape[2]
    for i in range(n):
        colour = _PALETTE[i % len(_PALETTE)]
        for x, y in pts[:, :, i]:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="1.6" fill="{colour}"/>')
    out.append("</g>")
    if truth is not None:
        out.append('<g id="truth" stroke="black" stroke-width="1.5">')
        for i in range(truth.shape[1]):
            cx, cy = sx(truth[0, i]), sy(truth[1, i])
            out.append(f'<path d="M{cx - 4:.2f},{cy - 4:.2f}L{cx + 4:.2f},{cy + 4:.2f}'
                       f'M{cx - 4:.2f},{cy + 4:.2f}L{cx + 4:.2f},{cy - 4:.2f}"/>')
            out.append(f'<text x="{cx + 5:.2f}" y="{cy - 5:.2f}" font-size="9" stroke="none" '
                       f'font-family="sans-serif">{i + 1}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
