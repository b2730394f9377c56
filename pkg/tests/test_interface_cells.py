"""Matrix-interface partitioning against direct slab oracles.

The axis-aligned fixtures make every expected cell a rectangle whose bounds
can be written down by hand; the angled integration case checks the
bifurcation-matching invariant geometrically.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamgen.geometry import ConvexPolygon, DirectedLine, Tolerances
from lamgen.interface_cells import (
    BandStation,
    dedupe_stations,
    merge_band_stations,
    partition_interface,
    partition_ply_interfaces,
)
from lamgen.ply_layout import Strip, discretize_ply, strip_band
from lamgen.yarn_cuts import YarnCrackletPlan, segment_ply

TOL = Tolerances()
EPS = TOL.coincidence_eps
T_F = 0.2


def iface_strip(s_lo=-10.0, s_hi=10.0, o_lo=0.75, o_hi=0.85, index=1):
    poly = ConvexPolygon.build(
        [(s_lo, o_lo), (s_hi, o_lo), (s_hi, o_hi), (s_lo, o_hi)])
    return Strip(index, "interface", poly, (o_lo, o_hi))


def plan(stations, index, t_f=T_F):
    return YarnCrackletPlan(index, tuple(stations), t_f)


AXIS = DirectedLine((0.0, 0.0), (1.0, 0.0))


def oracle_cells(span, lines):
    """Slab widths between consecutive in-span cut lines."""
    inside = [s for s in lines if span[0] + EPS < s < span[1] - EPS]
    bounds = [span[0]] + inside + [span[1]]
    return [(a, b) for a, b in zip(bounds, bounds[1:])]


def cell_spans(cells):
    out = []
    for c in cells:
        xs = [v[0] for v in c.vertices]
        out.append((min(xs), max(xs)))
    return out


def assert_spans(cells, expected):
    np.testing.assert_allclose(np.array(cell_spans(cells)),
                               np.array(expected), atol=1e-9)


def test_no_cuts_whole_interface():
    strip = iface_strip()
    got = partition_interface(strip, AXIS, plan([], 0), plan([], 2), TOL)
    assert len(got.cells) == 1
    assert got.cells[0].area == pytest.approx(strip.polygon.area)
    assert got.bifurcation_stations == []
    assert got.cut_lines == []


def test_one_left_cut_three_cells():
    got = partition_interface(iface_strip(), AXIS, plan([2.0], 0), plan([], 2), TOL)
    assert_spans(got.cells, [(-10.0, 1.9), (1.9, 2.1), (2.1, 10.0)])
    [b] = got.bifurcation_stations
    assert b.station == 2.0 and b.sources == ((0, 0),)


def test_aligned_cuts_merge_to_three():
    # same physical bifurcation seen from both neighbours
    got = partition_interface(iface_strip(), AXIS,
                              plan([2.0], 0), plan([2.0 + 0.4 * EPS], 2), TOL)
    assert len(got.cells) == 3
    [b] = got.bifurcation_stations
    assert b.station == 2.0                       # earlier station wins
    assert b.sources == ((0, 0), (2, 0))


def test_separated_cuts_five_cells():
    got = partition_interface(iface_strip(), AXIS, plan([2.0], 0), plan([5.0], 2), TOL)
    assert_spans(got.cells,
        [(-10.0, 1.9), (1.9, 2.1), (2.1, 4.9), (4.9, 5.1), (5.1, 10.0)])
    assert [b.sources for b in got.bifurcation_stations] == [((0, 0),), ((2, 0),)]


def test_misaligned_intersecting_bands():
    # bands overlap but are offset by less than t_f: all four lines survive
    got = partition_interface(iface_strip(), AXIS, plan([2.0], 0), plan([2.08], 2), TOL)
    assert got.cut_lines == pytest.approx([1.9, 1.98, 2.1, 2.18])
    assert_spans(got.cells,
        [(-10.0, 1.9), (1.9, 1.98), (1.98, 2.1), (2.1, 2.18), (2.18, 10.0)])


def test_touching_bands_share_one_line():
    # right band starts exactly where the left band ends
    got = partition_interface(iface_strip(), AXIS, plan([2.0], 0), plan([2.2], 2), TOL)
    assert got.cut_lines == pytest.approx([1.9, 2.1, 2.3])
    assert len(got.cells) == 4


def test_band_clipped_by_interface_end():
    # band centre inside, lower edge beyond the strip start
    strip = iface_strip(s_lo=1.95)
    got = partition_interface(strip, AXIS, plan([2.0], 0), plan([], 2), TOL)
    assert_spans(got.cells, [(1.95, 2.1), (2.1, 10.0)])
    total = sum(c.area for c in got.cells)
    assert total == pytest.approx(strip.polygon.area, rel=1e-12)


def test_triangle_side_contributes_nothing():
    got = partition_interface(iface_strip(), AXIS, plan([3.0], 0), None, TOL)
    assert len(got.cells) == 3
    assert [b.sources for b in got.bifurcation_stations] == [((0, 0),)]


def test_merge_chain_snaps_to_earliest():
    plans = (plan([2.0, 5.0], 0), plan([2.0 + 0.5 * EPS, 2.0 + 0.9 * EPS], 2))
    merged = merge_band_stations(plans, EPS)
    assert [m.station for m in merged] == [2.0, 5.0]
    assert merged[0].sources == ((0, 0), (2, 0), (2, 1))


def test_dedupe_keeps_earliest():
    vals = [1.0, 1.0 + 0.3 * EPS, 2.0, 2.0 + 2.0 * EPS]
    assert dedupe_stations(vals, EPS) == [1.0, 2.0, 2.0 + 2.0 * EPS]


def test_bifurcation_vertices_match_on_angled_ply():
    layout = discretize_ply(25.0, 10.0, 21.0, 1.5, 0.1, tol=TOL)
    seg = segment_ply(layout, 5.0, T_F, 25.0, TOL)
    sets = partition_ply_interfaces(seg, TOL)
    assert sets, "expected interface strips at this width"

    checked = 0
    for index, mset in sets.items():
        cell_verts = np.array([v for c in mset.cells for v in c.vertices])
        for side in (index - 1, index + 1):
            yarn = seg.yarns.get(side)
            if yarn is None:
                continue
            for cracklet in yarn.cracklets:
                for v in cracklet.vertices:
                    off = layout.axis.offset_of(v)
                    if min(abs(off - mset.strip.band[0]),
                           abs(off - mset.strip.band[1])) > 1e-7:
                        continue  # corner on the far side of the yarn
                    d = np.hypot(cell_verts[:, 0] - v[0], cell_verts[:, 1] - v[1])
                    assert d.min() < 5 * EPS
                    checked += 1
    assert checked >= 8


@settings(max_examples=120, deadline=None)
@given(st.data())
def test_partition_tiles_any_plan_pair(data):
    s_lo = data.draw(st.floats(-12.0, -2.0))
    s_hi = data.draw(st.floats(2.0, 12.0))
    t_f = data.draw(st.floats(0.02, 0.5))
    strip = iface_strip(s_lo=s_lo, s_hi=s_hi)

    def draw_plan(index):
        n = data.draw(st.integers(0, 5))
        gaps = data.draw(st.lists(st.floats(0.05, 6.0), min_size=n, max_size=n))
        start = data.draw(st.floats(s_lo - 3.0, s_lo + 3.0))
        stations, s = [], start
        for g in gaps:
            s += g
            stations.append(s)
        return plan(stations, index, t_f)

    got = partition_interface(strip, AXIS, draw_plan(0), draw_plan(2), TOL)

    total = sum(c.area for c in got.cells)
    assert total == pytest.approx(strip.polygon.area, rel=1e-9)

    spans = cell_spans(got.cells)
    assert all(b[0] >= a[1] - 1e-9 for a, b in zip(spans, spans[1:]))

    # every surviving cut line shows up as a cell boundary
    bounds = {round(s, 7) for a, b in spans for s in (a, b)}
    for s in got.cut_lines:
        if s_lo + 1e-7 < s < s_hi - 1e-7:
            assert round(s, 7) in bounds
