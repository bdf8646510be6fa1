"""SVG heatmap of a reduction potential matrix.

Columns are window start times labelled by clock hour, rows are window
lengths with k = 1 at the bottom. The colour ramp runs from white at 0 to
dark blue at the matrix maximum; negative cells are drawn white.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union
from xml.sax.saxutils import escape

import numpy as np

from .errors import AllMasked
from .matrix import Normalization, ReductionPotentialMatrix

CELL = 14
MARGIN_LEFT = 56
MARGIN_TOP = 30
MARGIN_BOTTOM = 54
BAR_WIDTH = 14
BAR_GAP = 24
BAR_STEPS = 64
LOW_RGB = (255, 255, 255)
HIGH_RGB = (8, 48, 107)


def color(fraction: float) -> str:
    f = min(max(float(fraction), 0.0), 1.0)
    rgb = [round(lo + (hi - lo) * f) for lo, hi in zip(LOW_RGB, HIGH_RGB)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def color_scale(matrix: ReductionPotentialMatrix) -> tuple[float, float]:
    """``(0, vmax)`` colour range; an all-zero matrix gets ``(0, 1)``."""
    if not matrix.valid_mask.any():
        raise AllMasked("matrix has no valid cells to render")
    vmax = float(np.max(matrix.values[matrix.valid_mask]))
    return 0.0, vmax if vmax > 0 else 1.0


def _num(x: float) -> str:
    return f"{x:.6g}"


def render_heatmap(
    matrix: ReductionPotentialMatrix,
    path: Optional[Union[str, Path]] = None,
    title: str = "Reduction potential",
) -> str:
    """Render ``matrix`` to an SVG string, also writing it to ``path`` if given."""
    _, vmax = color_scale(matrix)
    D, T = matrix.values.shape
    horizon = matrix.horizon
    grid_w, grid_h = T * CELL, D * CELL
    bar_x = MARGIN_LEFT + grid_w + BAR_GAP
    width = bar_x + BAR_WIDTH + 70
    height = MARGIN_TOP + grid_h + MARGIN_BOTTOM
    unit = "kW per vehicle" if matrix.normalization is Normalization.PER_VEHICLE else "kW"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
        f'<text x="{MARGIN_LEFT}" y="{MARGIN_TOP - 12}" font-size="12">{escape(title)} ({unit})</text>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{grid_w}" height="{grid_h}" '
        'fill="none" stroke="#cccccc" stroke-width="0.5"/>',
        '<g class="cells" stroke="none">',
    ]
    for k in range(1, D + 1):
        y = MARGIN_TOP + (D - k) * CELL
        for t in range(T):
            if not matrix.valid_mask[k - 1, t]:
                continue
            value = float(matrix.values[k - 1, t])
            out.append(
                f'<rect x="{MARGIN_LEFT + t * CELL}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{color(value / vmax)}" data-k="{k}" data-t="{t}" data-value="{_num(value)}"/>'
            )
    out.append("</g>")

    label_every = max(1, int(np.ceil(T / 16)))
    axis_y = MARGIN_TOP + grid_h
    out.append('<g class="x-axis" text-anchor="end">')
    for t in range(0, T, label_every):
        x = MARGIN_LEFT + t * CELL + CELL / 2
        out.append(
            f'<text x="{_num(x)}" y="{axis_y + 8}" transform="rotate(-60 {_num(x)} {axis_y + 8})">'
            f"{horizon.clock_label(t)}</text>"
        )
    out.append("</g>")
    out.append(f'<text x="{MARGIN_LEFT + grid_w / 2:g}" y="{height - 6}" text-anchor="middle">window start</text>')
    row_every = max(1, int(np.ceil(D / 12)))
    out.append('<g class="y-axis" text-anchor="end">')
    for k in range(1, D + 1, row_every):
        y = MARGIN_TOP + (D - k) * CELL + CELL / 2 + 3
        out.append(f'<text x="{MARGIN_LEFT - 4}" y="{_num(y)}">{k}</text>')
    out.append("</g>")
    out.append(
        f'<text x="12" y="{MARGIN_TOP + grid_h / 2:g}" text-anchor="middle" '
        f'transform="rotate(-90 12 {MARGIN_TOP + grid_h / 2:g})">window length (slots)</text>'
    )

    out.append('<g class="colorbar" stroke="none">')
    step_h = grid_h / BAR_STEPS
    for i in range(BAR_STEPS):
        y = MARGIN_TOP + grid_h - (i + 1) * step_h
        out.append(
            f'<rect x="{bar_x}" y="{_num(y)}" width="{BAR_WIDTH}" height="{_num(step_h)}" '
            f'fill="{color((i + 0.5) / BAR_STEPS)}"/>'
        )
    out.append(
        f'<rect x="{bar_x}" y="{MARGIN_TOP}" width="{BAR_WIDTH}" height="{grid_h}" '
        'fill="none" stroke="#666666" stroke-width="0.5"/>'
    )
    for frac in (0.0, 0.5, 1.0):
        y = MARGIN_TOP + grid_h - frac * grid_h + 3
        out.append(f'<text x="{bar_x + BAR_WIDTH + 4}" y="{_num(y)}">{_num(frac * vmax)}</text>')
    out.append("</g>")
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(svg, encoding="utf-8", newline="")
    return svg
