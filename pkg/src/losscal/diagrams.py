"""Standalone SVG reliability diagrams with a CSV sidecar.

No plotting dependency: charts are assembled as SVG 1.1 text, which keeps
outputs byte-reproducible and diffable in tests. Each diagram shows the
per-bin empirical value as bars over the bin midpoints, the 45-degree
perfect-calibration line, shaded calibration gaps, and a bin-count
histogram strip underneath.
"""

from __future__ import annotations

from pathlib import Path

from .metrics import DIAGRAM_MODES, DiagramRow

_PLOT = 380.0
_LEFT = 55.0
_TOP = 20.0
_STRIP_GAP = 45.0
_STRIP_H = 90.0
_WIDTH = 470.0
_HEIGHT = _TOP + _PLOT + _STRIP_GAP + _STRIP_H + 45.0

_BAR_FILL = {"confidence": "#4878a8", "uncertainty": "#c07840"}
_AXIS_LABELS = {
    "confidence": ("mean confidence", "empirical accuracy"),
    "uncertainty": ("mean normalized uncertainty", "empirical error rate"),
}


def _x(v: float) -> float:
    return _LEFT + v * _PLOT


def _y(v: float) -> float:
    return _TOP + (1.0 - v) * _PLOT


def render_diagram_svg(rows: list[DiagramRow], style: str = "confidence") -> str:
    """Render reliability rows as an SVG document string."""
    if style not in DIAGRAM_MODES:
        raise ValueError(f"style must be one of {DIAGRAM_MODES}, got {style!r}")
    x_label, y_label = _AXIS_LABELS[style]
    bar_fill = _BAR_FILL[style]
    max_count = max((row.count for row in rows), default=0)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH:.0f}" height="{_HEIGHT:.0f}" '
        f'viewBox="0 0 {_WIDTH:.0f} {_HEIGHT:.0f}">',
        f'<rect x="0" y="0" width="{_WIDTH:.0f}" height="{_HEIGHT:.0f}" fill="white"/>',
    ]

    # calibration gaps first so bars draw on top of the shading
    for row in rows:
        if row.count == 0 or row.gap == 0.0:
            continue
        top = max(row.empirical_y, row.mean_x)
        bot = min(row.empirical_y, row.mean_x)
        parts.append(
            f'<rect class="gap" x="{_x(row.lo):.2f}" y="{_y(top):.2f}" '
            f'width="{(row.hi - row.lo) * _PLOT:.2f}" height="{(top - bot) * _PLOT:.2f}" '
            f'fill="#d05050" fill-opacity="0.35"/>'
        )
    for row in rows:
        if row.count == 0:
            continue
        parts.append(
            f'<rect class="bar" x="{_x(row.lo):.2f}" y="{_y(row.empirical_y):.2f}" '
            f'width="{(row.hi - row.lo) * _PLOT:.2f}" height="{row.empirical_y * _PLOT:.2f}" '
            f'fill="{bar_fill}" fill-opacity="0.85" stroke="#333333" stroke-width="0.5"/>'
        )

    # perfect-calibration diagonal and plot frame
    parts.append(
        f'<line class="diagonal" x1="{_x(0):.2f}" y1="{_y(0):.2f}" '
        f'x2="{_x(1):.2f}" y2="{_y(1):.2f}" stroke="#555555" '
        f'stroke-width="1.5" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<rect x="{_LEFT:.2f}" y="{_TOP:.2f}" width="{_PLOT:.2f}" height="{_PLOT:.2f}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    for tick in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        parts.append(
            f'<text x="{_x(tick):.2f}" y="{_y(0) + 16:.2f}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{tick:.1f}</text>'
        )
        parts.append(
            f'<text x="{_LEFT - 8:.2f}" y="{_y(tick) + 4:.2f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{tick:.1f}</text>'
        )
    parts.append(
        f'<text x="{_x(0.5):.2f}" y="{_y(0) + 34:.2f}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{_y(0.5):.2f}" font-size="13" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 16 {_y(0.5):.2f})">{y_label}</text>'
    )

    # bin-count histogram strip
    strip_top = _TOP + _PLOT + _STRIP_GAP
    parts.append(
        f'<rect x="{_LEFT:.2f}" y="{strip_top:.2f}" width="{_PLOT:.2f}" height="{_STRIP_H:.2f}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    if max_count > 0:
        for row in rows:
            if row.count == 0:
                continue
            h = (row.count / max_count) * (_STRIP_H - 4.0)
            parts.append(
                f'<rect class="count" x="{_x(row.lo):.2f}" y="{strip_top + _STRIP_H - h:.2f}" '
                f'width="{(row.hi - row.lo) * _PLOT:.2f}" height="{h:.2f}" '
                f'fill="#999999" stroke="#333333" stroke-width="0.5"/>'
            )
    parts.append(
        f'<text x="{_x(0.5):.2f}" y="{strip_top + _STRIP_H + 28:.2f}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif">samples per bin</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def rows_to_csv(rows: list[DiagramRow]) -> str:
    """Serialize diagram rows as ``lo,hi,count,mean_x,empirical_y,gap`` CSV text."""
    lines = ["lo,hi,count,mean_x,empirical_y,gap"]
    for row in rows:
        lines.append(
            f"{row.lo:.6f},{row.hi:.6f},{row.count},"
            f"{row.mean_x:.6f},{row.empirical_y:.6f},{row.gap:.6f}"
        )
    return "\n".join(lines) + "\n"


def emit_diagram(rows: list[DiagramRow], path: str | Path, style: str = "confidence") -> None:
    """Write the SVG diagram and its sibling CSV (same name, ``.csv`` suffix).

    Raises:
        OSError: Unwritable path.
    """
    path = Path(path)
    svg = render_diagram_svg(rows, style=style)
    path.write_text(svg, encoding="utf-8")
    path.with_suffix(".csv").write_text(rows_to_csv(rows), encoding="utf-8")
