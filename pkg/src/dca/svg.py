"""SVG heatmaps of vertex functions on a lattice.

Each face is filled with the color of the mean of its four vertex values.
The color map has 256 entries, linearly interpolated between the anchor
colors below (dark blue, teal, green, yellow); value ``v`` maps to entry
``floor(255.999 * (v - min u) / (max u - min u))``, and a constant ``u``
maps every face to entry 0.
"""

from __future__ import annotations

import numpy as np

from .errors import IoError
from .lattice import QuadLattice

ANCHORS = np.array(
    [
        [68, 1, 84],
        [59, 82, 139],
        [33, 145, 140],
        [94, 201, 98],
        [253, 231, 37],
    ],
    dtype=float,
)


def colormap(n: int = 256):
    """``(n, 3)`` uint8 table interpolating :data:`ANCHORS`."""
    t = np.linspace(0.0, len(ANCHORS) - 1, n)
    k = np.minimum(t.astype(int), len(ANCHORS) - 2)
    w = (t - k)[:, None]
    return np.rint(ANCHORS[k] * (1 - w) + ANCHORS[k + 1] * w).astype(np.uint8)


def color_index(values, lo, hi):
    values = np.asarray(values, dtype=float)
    if hi <= lo:
        return np.zeros(values.shape, dtype=int)
    return np.clip(np.floor(255.999 * (values - lo) / (hi - lo)), 0, 255).astype(int)


def render_svg(L: QuadLattice, u, labels: bool = False, width: float = 600.0) -> str:
    u = np.asarray(u, dtype=float)
    if u.shape != (L.n_vertices,):
        raise ValueError(f"expected {L.n_vertices} values, got shape {u.shape}")
    if np.iscomplexobj(u) or not np.all(np.isfinite(u)):
        raise ValueError("u must be finite and real")
    p = L.points
    lo, hi = p.min(axis=0), p.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1])) or 1.0
    pad = 0.05 * span
    s = width / (span + 2 * pad)
    # flip y so that the picture is upright
    X = (p[:, 0] - lo[0] + pad) * s
    Y = (hi[1] - p[:, 1] + pad) * s
    W = (hi[0] - lo[0] + 2 * pad) * s
    H = (hi[1] - lo[1] + 2 * pad) * s
    cmap = colormap()
    idx = color_index(u[L.faces].mean(axis=1), float(u.min()), float(u.max()))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.2f}" height="{H:.2f}" '
        f'viewBox="0 0 {W:.2f} {H:.2f}">',
        f'<rect width="{W:.2f}" height="{H:.2f}" fill="white"/>',
        '<g stroke="#333333" stroke-width="0.5">',
    ]
    for face, k in zip(L.faces, idx):
        r, g, b = cmap[k]
        pts = " ".join(f"{X[v]:.3f},{Y[v]:.3f}" for v in face)
        out.append(f'<polygon points="{pts}" fill="#{r:02x}{g:02x}{b:02x}"/>')
    out.append("</g>")
    if labels:
        fs = max(6.0, min(14.0, 0.25 * s * L.max_edge))
        out.append(f'<g font-family="sans-serif" font-size="{fs:.1f}" fill="black">')
        for v in range(L.n_vertices):
            out.append(f'<text x="{X[v] + 2:.3f}" y="{Y[v] - 2:.3f}">{u[v]:.4g}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(L: QuadLattice, u, path, labels: bool = False):
    text = render_svg(L, u, labels=labels)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path
