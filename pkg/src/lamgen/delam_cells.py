"""Partition a ply-to-ply interface into delamination cracklets.

Two passes over the footprint rectangle.  The first cuts full lines along
both edges of every matrix-interface strip of both adjacent plies.  After it
every cell sits inside exactly one strip of each ply, so the second pass can
propagate the perpendicular crack stations strip by strip: a yarn strip
contributes the edges of its own cut bands, an interface strip contributes
the merged bifurcation lines its matrix cracklets were built from.  The
result nests under the intra-ply partition of both neighbours, which is what
gives every delamination cell a single tie partner above and below.

Cells that come out below area_threshold (near-concurrent cut lines) are
suppressed and leave a hole; callers log them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import ConvexPolygon, DirectedLine, Tolerances, split_convex
from .interface_cells import MatrixCrackletSet, partition_ply_interfaces
from .ply_layout import PlyLayout, ROLE_YARN, discretize_ply
from .yarn_cuts import SegmentedPly, segment_ply

KIND_INTERFACE_EDGE = "interface-edge"
KIND_YARN_CUT_EDGE = "yarn-cut-edge"
KIND_BIFURCATION_EDGE = "bifurcation-edge"


@dataclass(frozen=True)
class CutRecord:
    kind: str
    ply: int
    strip_index: int
    value: float     # offset for full lines, station for banded ones


@dataclass
class DelaminationCrackletSet:
    between_plies: tuple
    cells: list                          # ConvexPolygon
    suppressed: list = field(default_factory=list)  # (polygon, area)
    cut_records: list = field(default_factory=list)


@dataclass(frozen=True)
class PlyPartition:
    """Everything one ply contributes to its neighbouring interfaces."""
    layout: PlyLayout
    segmented: SegmentedPly
    matrix_sets: dict  # strip_index -> MatrixCrackletSet


def build_ply_partition(length: float, width: float, angle: float, d: float,
                        t_m: float, l: float, t_f: float, ply_index: int,
                        tol: Tolerances, cuts_enabled: bool = True) -> PlyPartition:
    layout = discretize_ply(length, width, angle, d, t_m, ply_index, tol)
    seg = segment_ply(layout, l, t_f, length, tol, cuts_enabled)
    return PlyPartition(layout, seg, partition_ply_interfaces(seg, tol))


def partition_ply_interface(rect: ConvexPolygon, below: PlyPartition,
                            above: PlyPartition, tol: Tolerances) -> DelaminationCrackletSet:
    pair = (below.layout.ply_index, above.layout.ply_index)
    out = DelaminationCrackletSet(pair, [rect])

    for part in (below, above):
        _cut_interface_edges(out, part, tol)
    for part in (below, above):
        _cut_strip_stations(out, part, tol)

    kept, dropped = suppress_small(out.cells, tol)
    out.cells, out.suppressed = kept, dropped
    return out


def _cut_interface_edges(out, part: PlyPartition, tol: Tolerances):
    axis = part.layout.axis
    ply = part.layout.ply_index
    for strip in part.layout.interfaces:
        for off in strip.band:
            line = axis.offset_line(off)
            out.cells = _split_all(out.cells, line, tol)
            out.cut_records.append(
                CutRecord(KIND_INTERFACE_EDGE, ply, strip.strip_index, off))


def _cut_strip_stations(out, part: PlyPartition, tol: Tolerances):
    axis = part.layout.axis
    ply = part.layout.ply_index
    for strip in part.layout.strips:
        if strip.role == ROLE_YARN:
            plan = part.segmented.plan(strip.strip_index)
            stations = [s for band in (plan.bands() if plan else []) for s in band]
            kind = KIND_YARN_CUT_EDGE
        else:
            mset = part.matrix_sets.get(strip.strip_index)
            stations = list(mset.cut_lines) if mset else []
            kind = KIND_BIFURCATION_EDGE
        for s in sorted(stations):
            line = DirectedLine(axis.point_at(s), axis.normal)
            out.cells = _split_banded(out.cells, line, axis, strip.band, tol)
            out.cut_records.append(CutRecord(kind, ply, strip.strip_index, s))


def _split_all(cells, line, tol):
    new = []
    for c in cells:
        left, right = split_convex(c, line, tol)
        new.extend(p for p in (left, right) if p is not None)
    return new


def _split_banded(cells, line, axis, band, tol):
    """Split only cells sitting inside the strip's offset band."""
    eps = tol.coincidence_eps
    new = []
    for c in cells:
        off = axis.offset_of(c.centroid)
        if band[0] - eps <= off <= band[1] + eps:
            left, right = split_convex(c, line, tol)
            new.extend(p for p in (left, right) if p is not None)
        else:
            new.append(c)
    return new


def suppress_small(cells, tol: Tolerances):
    kept, dropped = [], []
    for c in cells:
        (dropped if c.area < tol.area_threshold else kept).append(c)
    return kept, [(c, c.area) for c in dropped]
