"""Strip tiling of one ply: alternating yarn and yarn-interface strips.

Strips run along the ply angle and are indexed by a signed strip_index
counting outward from the center yarn (index 0).  Even indices are yarns of
width d, odd indices are interfaces of width t_m, so the tiling has period
d + t_m and is centro-symmetric about the laminate center.  Outer partial
strips are kept as-is; clipped slivers below the area threshold are merged
into their inward neighbour and reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import ConvexPolygon, DirectedLine, Tolerances, clip_strip, rectangle

ROLE_YARN = "yarn"
ROLE_INTERFACE = "interface"


def strip_role(strip_index: int) -> str:
    return ROLE_YARN if strip_index % 2 == 0 else ROLE_INTERFACE


def strip_band(strip_index: int, d: float, t_m: float) -> tuple:
    """Perpendicular offset interval [lo, hi] of a strip; center yarn is 0."""
    k = strip_index
    if k < 0:
        lo, hi = strip_band(-k, d, t_m)
        return -hi, -lo
    if k == 0:
        return -0.5 * d, 0.5 * d
    period = d + t_m
    j = (k + 1) // 2
    if k % 2:  # interface
        lo = 0.5 * d + (j - 1) * period
        return lo, lo + t_m
    lo = 0.5 * d + (j - 1) * period + t_m
    return lo, lo + d


@dataclass(frozen=True)
class Strip:
    strip_index: int
    role: str
    polygon: ConvexPolygon
    band: tuple  # (offset_lo, offset_hi) perpendicular to the axis


@dataclass
class PlyLayout:
    ply_index: int
    angle: float
    axis: DirectedLine
    strips: list  # list[Strip], ordered by strip_index
    merged_slivers: list = field(default_factory=list)  # (strip_index, area)

    @property
    def yarns(self):
        return [s for s in self.strips if s.role == ROLE_YARN]

    @property
    def interfaces(self):
        return [s for s in self.strips if s.role == ROLE_INTERFACE]

    def strip(self, strip_index: int) -> Strip | None:
        for s in self.strips:
            if s.strip_index == strip_index:
                return s
        return None


def discretize_ply(length: float, width: float, angle: float, d: float,
                   t_m: float, ply_index: int = 0,
                   tol: Tolerances | None = None) -> PlyLayout:
    """Tile the length x width rectangle with strips at the given angle."""
    tol = tol or Tolerances()
    rect = rectangle(length, width)
    axis = DirectedLine.from_angle((0.0, 0.0), angle)

    # perpendicular extent of the rectangle
    offsets = [axis.offset_of(v) for v in rect.vertices]
    o_lo, o_hi = min(offsets), max(offsets)

    pieces = {}
    for k in _band_indices(o_lo, o_hi, d, t_m):
        lo, hi = strip_band(k, d, t_m)
        poly = clip_strip(rect, axis, max(lo, o_lo - 1.0), min(hi, o_hi + 1.0), tol)
        if poly is not None:
            pieces[k] = [max(lo, o_lo - 1.0), min(hi, o_hi + 1.0), poly]

    merged = _merge_outer_slivers(rect, axis, pieces, tol)

    strips = [Strip(k, strip_role(k), poly, (lo, hi))
              for k, (lo, hi, poly) in sorted(pieces.items())]
    return PlyLayout(ply_index, angle, axis, strips, merged)


def _band_indices(o_lo: float, o_hi: float, d: float, t_m: float):
    """All strip indices whose band intersects [o_lo, o_hi]."""
    ks = [0]
    k = 1
    while strip_band(k, d, t_m)[0] < o_hi:
        ks.append(k)
        k += 1
    k = -1
    while strip_band(k, d, t_m)[1] > o_lo:
        ks.append(k)
        k -= 1
    return sorted(ks)


def _merge_outer_slivers(rect, axis, pieces: dict, tol: Tolerances) -> list:
    """Re-clip the outermost strip over its neighbour's band when it is a
    sub-threshold sliver; repeats inward until the outer strip is real."""
    merged = []
    for direction in (1, -1):
        while True:
            ks = sorted(pieces)
            outer = ks[-1] if direction == 1 else ks[0]
            if outer == 0 or pieces[outer][2].area >= tol.area_threshold:
                break
            sliver = pieces.pop(outer)
            merged.append((outer, sliver[2].area))
            neighbour = outer - direction
            if neighbour in pieces:
                lo, hi, _ = pieces[neighbour]
                lo, hi = (lo, sliver[1]) if direction == 1 else (sliver[0], hi)
                pieces[neighbour] = [lo, hi, clip_strip(rect, axis, lo, hi, tol)]
    return merged
