"""Yarn shape classification, safe insertion zones, and cracklet planning.

A clipped yarn strip has two edges on its band lines (axial edges) unless the
rectangle corners cut them away.  Cuts are thin bands perpendicular to the
yarn axis, placed as a maximal evenly spaced comb (spacing exactly l) centered
in the safe zone, which is the axial overlap of the two axial edges.  Shapes
without an axial edge pair (corner triangles and the rarer corner quads)
carry no cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import (
    ConvexPolygon,
    DirectedLine,
    Tolerances,
    split_convex,
)
from .ply_layout import PlyLayout, Strip

SHAPE_PARALLELOGRAM = "parallelogram"
SHAPE_SNIPPED = "snipped_parallelogram"
SHAPE_TRAPEZOID = "trapezoid"
SHAPE_TRIANGLE = "triangle"


@dataclass(frozen=True)
class YarnShape:
    kind: str
    axial_edges: tuple  # ((p, q), (p, q)) or ()


@dataclass(frozen=True)
class SafeZone:
    s_lo: float
    s_hi: float

    @property
    def length(self) -> float:
        return self.s_hi - self.s_lo


@dataclass(frozen=True)
class YarnCrackletPlan:
    strip_index: int
    cut_stations: tuple  # axial positions, strictly increasing
    t_f: float

    def bands(self):
        return [(s - 0.5 * self.t_f, s + 0.5 * self.t_f) for s in self.cut_stations]


@dataclass
class SegmentedYarn:
    strip: Strip
    shape: YarnShape
    zone: SafeZone | None
    plan: YarnCrackletPlan
    segments: list          # ConvexPolygon, ordered along the axis
    cracklets: list         # ConvexPolygon, one per cut station
    spans_loading_ends: bool = False


@dataclass
class SegmentedPly:
    layout: PlyLayout
    yarns: dict = field(default_factory=dict)  # strip_index -> SegmentedYarn
    warnings: list = field(default_factory=list)

    def plan(self, strip_index: int) -> YarnCrackletPlan | None:
        y = self.yarns.get(strip_index)
        return y.plan if y is not None else None


def classify_shape(yarn: ConvexPolygon, axis: DirectedLine, tol: Tolerances) -> YarnShape:
    axial, others = [], []
    for p, q in yarn.edges():
        edge = DirectedLine.through(p, q)
        (axial if edge.parallel_to(axis, tol.angle_eps) else others).append((p, q))
    n = len(yarn.vertices)
    if len(axial) < 2:
        # corner pieces: triangles, or quads hugging a whole rectangle side
        return YarnShape(SHAPE_TRIANGLE, ())
    pair = tuple(axial[:2])
    if n >= 5:
        return YarnShape(SHAPE_SNIPPED, pair)
    a = DirectedLine.through(*others[0])
    b = DirectedLine.through(*others[1])
    if a.parallel_to(b, tol.angle_eps):
        return YarnShape(SHAPE_PARALLELOGRAM, pair)
    return YarnShape(SHAPE_TRAPEZOID, pair)


def compute_safe_zone(shape: YarnShape, axis: DirectedLine) -> SafeZone | None:
    """Axial interval where both axial edges are present."""
    if not shape.axial_edges:
        return None
    intervals = []
    for p, q in shape.axial_edges:
        sp, sq = axis.station_of(p), axis.station_of(q)
        intervals.append((min(sp, sq), max(sp, sq)))
    lo = max(a for a, _ in intervals)
    hi = min(b for _, b in intervals)
    if hi <= lo:
        return None
    return SafeZone(lo, hi)


def plan_stations(zone: SafeZone, l: float) -> list:
    """Maximal centered comb: k cuts with (k + 1) * l <= zone length."""
    k = int(math.floor(zone.length / l + 1e-12)) - 1
    if k < 1:
        return []
    start = zone.s_lo + 0.5 * (zone.length - (k - 1) * l)
    return [start + i * l for i in range(k)]


def plan_and_cut(strip: Strip, axis: DirectedLine, l: float, t_f: float,
                 tol: Tolerances, enabled: bool = True) -> SegmentedYarn:
    yarn = strip.polygon
    shape = classify_shape(yarn, axis, tol)
    zone = compute_safe_zone(shape, axis)
    stations = plan_stations(zone, l) if (enabled and zone is not None) else []
    plan = YarnCrackletPlan(strip.strip_index, tuple(stations), t_f)

    segments, cracklets = [yarn], []
    for s_lo, s_hi in plan.bands():
        tail = segments.pop()
        before, rest = _split_at_station(tail, axis, s_lo, tol)
        if rest is None:
            raise AssertionError("cut band beyond the end of its yarn")
        band, after = _split_at_station(rest, axis, s_hi, tol)
        if band is None or after is None:
            raise AssertionError("cut band beyond the end of its yarn")
        if before is not None:
            segments.append(before)
        cracklets.append(band)
        segments.append(after)
    return SegmentedYarn(strip, shape, zone, plan, segments, cracklets)


def _split_at_station(poly: ConvexPolygon, axis: DirectedLine, station: float,
                      tol: Tolerances):
    """(below, above) split by the perpendicular line at the given station."""
    origin = axis.point_at(station)
    cut = DirectedLine(origin, axis.normal)
    # the cut line's left normal is -axis.direction, so left = lower stations
    below, above = split_convex(poly, cut, tol)
    return below, above


def segment_ply(layout: PlyLayout, l: float, t_f: float, length: float,
                tol: Tolerances, enabled: bool = True) -> SegmentedPly:
    out = SegmentedPly(layout)
    for strip in layout.yarns:
        seg = plan_and_cut(strip, layout.axis, l, t_f, tol, enabled)
        seg.spans_loading_ends = _touches_both_ends(strip.polygon, length, tol)
        if seg.spans_loading_ends and not seg.plan.cut_stations:
            out.warnings.append(
                f"ply {layout.ply_index} yarn {strip.strip_index}: spans both "
                f"loaded ends with no cuts (fracture spacing too large)")
        out.yarns[strip.strip_index] = seg
    return out


def _touches_both_ends(poly: ConvexPolygon, length: float, tol: Tolerances) -> bool:
    xs = [v[0] for v in poly.vertices]
    eps = tol.coincidence_eps * 10.0
    return min(xs) <= -0.5 * length + eps and max(xs) >= 0.5 * length - eps
