"""Grid-of-ellipses comparison plot rendered as deterministic SVG.

Each (method, scenario) cell is an ellipse: fill color encodes one normalized
metric (green below 1.0, white at 1.0, red above), the ellipse aspect encodes
another (wide below 1.0, circle at 1.0, tall above). Rendering is a pure
function of the grid, with fixed float formatting and row-major element order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

GREEN = (0, 160, 0)
RED = (200, 0, 0)
WHITE = (255, 255, 255)

#: Color clamp: two octaves around the baseline value 1.0.
LOG2_CLAMP = 2.0
#: Shape clamp: ellipse aspect confined to [1/3, 3].
ASPECT_CLAMP = 3.0


@dataclass
class GmmsGrid:
    methods: list[str]  # y-axis, top to bottom
    scenarios: list[str]  # x-axis, left to right
    cells: dict[tuple[str, str], tuple[float, float]]  # (v_color, v_shape)
    color_label: str = "time"
    shape_label: str = "error"

    def validate(self) -> None:
        if not self.methods or not self.scenarios:
            raise ValueError("empty grid")
        for method in self.methods:
            for scenario in self.scenarios:
                if (method, scenario) not in self.cells:
                    raise ValueError(f"missing cell ({method}, {scenario})")
                v_color, v_shape = self.cells[(method, scenario)]
                if v_color <= 0 or v_shape <= 0:
                    raise ValueError(f"non-positive value in cell ({method}, {scenario})")


def color_score(v: float) -> float:
    """Map a normalized metric to [-1, 1]: negative = green, 0 = white, positive = red."""
    if v <= 0:
        raise ValueError("value must be positive")
    return max(-LOG2_CLAMP, min(LOG2_CLAMP, math.log2(v))) / LOG2_CLAMP


def fill_color(score: float) -> str:
    """Linear white-to-endpoint RGB interpolation for a color score."""
    endpoint = GREEN if score < 0 else RED
    t = abs(score)
    rgb = tuple(round(w + t * (e - w)) for w, e in zip(WHITE, endpoint))
    return "#%02x%02x%02x" % rgb

def shape_aspect(v: float) -> float:
    """Height/width ratio of the cell ellipse, clamped to [1/3, 3]."""
    if v <= 0:
        raise ValueError("value must be positive")
    return max(1.0 / ASPECT_CLAMP, min(ASPECT_CLAMP, v))


def _f(x: float) -> str:
    return f"{x:.2f}"


def render_gmms(grid: GmmsGrid, cell_px: int = 60) -> str:
    """Render the grid as an SVG 1.1 document (byte-deterministic)."""
    if cell_px < 1:
        raise ValueError("cell_px must be positive")
    grid.validate()
    label_w = 10 + 7 * max(len(m) for m in grid.methods)
    label_h = 24
    legend_h = 56
    width = label_w + cell_px * len(grid.scenarios) + 10
    height = label_h + cell_px * len(grid.methods) + legend_h
    r = cell_px * 0.38

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for j, scenario in enumerate(grid.scenarios):
        cx = label_w + (j + 0.5) * cell_px
        parts.append(
            f'<text x="{_f(cx)}" y="16" font-size="11" font-family="sans-serif" '
            f'text-anchor="middle">{scenario}</text>'
        )
    for i, method in enumerate(grid.methods):
        cy = label_h + (i + 0.5) * cell_px
        parts.append(
            f'<text x="{label_w - 6}" y="{_f(cy + 4)}" font-size="11" '
            f'font-family="sans-serif" text-anchor="end">{method}</text>'
        )
        for j, scenario in enumerate(grid.scenarios):
            v_color, v_shape = grid.cells[(method, scenario)]
            aspect = shape_aspect(v_shape)
            rx = r / math.sqrt(aspect)
            ry = r * math.sqrt(aspect)
            fill = fill_color(color_score(v_color))
            cx = label_w + (j + 0.5) * cell_px
            parts.append(
                f'<ellipse cx="{_f(cx)}" cy="{_f(cy)}" rx="{_f(rx)}" ry="{_f(ry)}" '
                f'fill="{fill}" stroke="#404040" stroke-width="1"/>'
            )
    legend_y = label_h + cell_px * len(grid.methods) + 18
    parts.append(
        f'<text x="8" y="{legend_y}" font-size="11" font-family="sans-serif">'
        f"color: {grid.color_label} (green &lt; 1 &lt; red)</text>"
    )
    for idx, v in enumerate((0.25, 0.5, 1.0, 2.0, 4.0)):
        x = 240 + idx * 20
        parts.append(
            f'<rect x="{x}" y="{legend_y - 10}" width="16" height="12" '
            f'fill="{fill_color(color_score(v))}" stroke="#404040" stroke-width="0.5"/>'
        )
    parts.append(
        f'<text x="8" y="{legend_y + 22}" font-size="11" font-family="sans-serif">'
        f"shape: {grid.shape_label} (wide &lt; 1 &lt; tall, circle = baseline)</text>"
    )
    for idx, v in enumerate((1 / 3, 1.0, 3.0)):
        x = 260 + idx * 28
        aspect = shape_aspect(v)
        parts.append(
            f'<ellipse cx="{x}" cy="{legend_y + 18}" rx="{_f(9 / math.sqrt(aspect))}" '
            f'ry="{_f(9 * math.sqrt(aspect))}" fill="#ffffff" '
            f'stroke="#404040" stroke-width="1"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
