"""Deterministic SVG plots of ply partitions and delamination interfaces."""

from __future__ import annotations

from .assembly import (ROLE_DELAM, ROLE_FIBER, ROLE_MATRIX, ROLE_SEGMENT,
                       Model)

_STYLE = {
    ROLE_SEGMENT: ("#d9c79e", "#6b5b33"),
    ROLE_FIBER: ("#c23b22", "#7a1f12"),
    ROLE_MATRIX: ("#7c9ed9", "#2d4f8a"),
    ROLE_DELAM: ("#e8e8f6", "#5757a8"),
}
_CLASS = {ROLE_SEGMENT: "yarn-segment", ROLE_FIBER: "yarn-cracklet",
          ROLE_MATRIX: "matrix-cell", ROLE_DELAM: "delam-cell"}


def _svg_open(length, width, scale=40.0):
    m = 0.05 * max(length, width)
    w, h = (length + 2 * m) * scale, (width + 2 * m) * scale
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" '
        f'height="{h:.0f}" viewBox="{-length / 2 - m:.6f} '
        f'{-width / 2 - m:.6f} {length + 2 * m:.6f} {width + 2 * m:.6f}">',
        f'<g transform="scale(1,-1)" stroke-width="{0.004 * max(length, width):.6f}">',
    ]


def _polygon(poly, fill, stroke, cls, opacity=1.0):
    pts = " ".join(f"{x:.6f},{y:.6f}" for x, y in poly.vertices)
    return (f'<polygon class="{cls}" points="{pts}" fill="{fill}" '
            f'stroke="{stroke}" fill-opacity="{opacity:.2f}"/>')


def svg_ply(model: Model, ply: int, path) -> int:
    """Parts of one ply (1-based); returns the polygon count."""
    labels = model.part_groups.get(f"ply-{ply}", [])
    lines = _svg_open(model.length, model.width)
    order = {ROLE_SEGMENT: 0, ROLE_MATRIX: 1, ROLE_FIBER: 2}
    parts = sorted((model.part(lb) for lb in labels),
                   key=lambda p: (order[p.role], p.key))
    for p in parts:
        fill, stroke = _STYLE[p.role]
        lines.append(_polygon(p.footprint, fill, stroke, _CLASS[p.role]))
    lines.extend(("</g>", "</svg>"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(parts)


def svg_interface(model: Model, below: int, path) -> int:
    """Delamination cells between ply `below` and the next one, with any
    suppressed slivers flagged; returns the cell polygon count."""
    labels = model.part_groups.get(f"delam-{below}-{below + 1}", [])
    lines = _svg_open(model.length, model.width)
    count = 0
    for lb in labels:
        p = model.part(lb)
        fill, stroke = _STYLE[p.role]
        lines.append(_polygon(p.footprint, fill, stroke, _CLASS[p.role]))
        count += 1
    for ply_below, poly, area in model.suppressed:
        if ply_below == below - 1:
            lines.append(_polygon(poly, "#f2a33c", "#a85d00",
                                  "suppressed-cell"))
    lines.extend(("</g>", "</svg>"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return count
