"""Partition yarn-to-yarn interface strips into matrix cracklets.

Every cut band of either neighbouring yarn projects two perpendicular cut
lines onto the interface (the band's edges), so each crack bifurcation gets
its four matching vertices.  Bands of the two neighbours that land within
coincidence_eps of each other are one physical bifurcation and are merged at
the earlier station; coincident lines from touching bands are deduplicated
the same way.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import ConvexPolygon, DirectedLine, Tolerances, split_convex
from .ply_layout import Strip
from .yarn_cuts import YarnCrackletPlan


@dataclass(frozen=True)
class BandStation:
    station: float   # band center after merging
    t_f: float
    sources: tuple   # ((side strip_index, cut index), ...)


@dataclass
class MatrixCrackletSet:
    interface_index: int
    strip: Strip
    cells: list                 # ConvexPolygon, ordered along the axis
    bifurcation_stations: list  # list[BandStation], merged, ascending
    cut_lines: list             # ascending line stations actually applied


def merge_band_stations(plans, eps: float) -> list:
    """Merge cut stations of the neighbouring plans (each entry a
    YarnCrackletPlan or None) into per-bifurcation BandStations."""
    raw = []
    for plan in plans:
        if plan is None:
            continue
        for idx, s in enumerate(plan.cut_stations):
            raw.append((s, plan.strip_index, idx, plan.t_f))
    raw.sort(key=lambda r: (r[0], r[1], r[2]))
    merged = []
    for s, strip_index, idx, t_f in raw:
        if merged and s - merged[-1][0] <= eps:
            merged[-1][2].append((strip_index, idx))
            merged[-1][1] = max(merged[-1][1], t_f)
        else:
            merged.append([s, t_f, [(strip_index, idx)]])
    return [BandStation(s, t_f, tuple(src)) for s, t_f, src in merged]


def dedupe_stations(values, eps: float) -> list:
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > eps:
            out.append(v)
    return out


def partition_interface(strip: Strip, axis: DirectedLine,
                        left_plan: YarnCrackletPlan | None,
                        right_plan: YarnCrackletPlan | None,
                        tol: Tolerances) -> MatrixCrackletSet:
    stations = merge_band_stations((left_plan, right_plan), tol.coincidence_eps)

    spans = [axis.station_of(v) for v in strip.polygon.vertices]
    s_min, s_max = min(spans), max(spans)
    eps = tol.coincidence_eps
    live = [b for b in stations
            if b.station + 0.5 * b.t_f > s_min + eps
            and b.station - 0.5 * b.t_f < s_max - eps]

    lines = dedupe_stations(
        [s for b in live for s in (b.station - 0.5 * b.t_f, b.station + 0.5 * b.t_f)],
        eps)

    cells = [strip.polygon]
    for s in lines:
        tail = cells.pop()
        below, above = _perpendicular_split(tail, axis, s, tol)
        if below is not None:
            cells.append(below)
        if above is not None:
            cells.append(above)
        if above is None:
            break  # remaining lines are beyond the strip
    return MatrixCrackletSet(strip.strip_index, strip, cells, live, lines)


def _perpendicular_split(poly: ConvexPolygon, axis: DirectedLine, station: float,
                         tol: Tolerances):
    cut = DirectedLine(axis.point_at(station), axis.normal)
    below, above = split_convex(poly, cut, tol)
    return below, above


def partition_ply_interfaces(segmented, tol: Tolerances) -> dict:
    """MatrixCrackletSet per interface strip of one segmented ply."""
    layout = segmented.layout
    out = {}
    for strip in layout.interfaces:
        left = segmented.plan(strip.strip_index - 1)
        right = segmented.plan(strip.strip_index + 1)
        out[strip.strip_index] = partition_interface(strip, layout.axis, left, right, tol)
    return out
