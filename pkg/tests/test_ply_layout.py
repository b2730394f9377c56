"""Ply strip-tiling tests.

The strip-count oracle below enumerates band/rectangle overlaps with plain
numpy projections and never touches the clipping kernel, so it is an
independent check of the tiling layout.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lamgen.geometry import Tolerances, intersection_area
from lamgen.ply_layout import ROLE_INTERFACE, ROLE_YARN, discretize_ply, strip_band

TOL = Tolerances()


def oracle_strip_indices(length, width, angle, d, t_m, eps=1e-12):
    """Independent band enumeration: project the rectangle corners onto the
    strip normal and list every strip index whose band truly overlaps."""
    th = math.radians(angle)
    n = np.array([-math.sin(th), math.cos(th)])
    corners = np.array([[-length / 2, -width / 2], [length / 2, -width / 2],
                        [length / 2, width / 2], [-length / 2, width / 2]])
    offs = corners @ n
    o_lo, o_hi = offs.min(), offs.max()
    ks = []
    k = 0
    while True:  # positive side, then negative via symmetry
        lo, hi = strip_band(k, d, t_m)
        if lo >= o_hi - eps:
            break
        if hi > o_lo + eps:
            ks.append(k)
        k += 1
    k = -1
    while True:
        lo, hi = strip_band(k, d, t_m)
        if hi <= o_lo + eps:
            break
        if lo < o_hi - eps:
            ks.append(k)
        k -= 1
    return sorted(ks)


def test_strip_band_arithmetic():
    d, t_m = 2.0, 0.1
    assert strip_band(0, d, t_m) == (-1.0, 1.0)
    assert strip_band(1, d, t_m) == (1.0, 1.1)
    assert strip_band(2, d, t_m) == (1.1, 3.1)
    assert strip_band(3, d, t_m) == (3.1, 3.2)
    lo, hi = strip_band(-2, d, t_m)
    assert (lo, hi) == (-3.1, -1.1)


def test_axis_aligned_counts_and_areas():
    # d=1 on a 10 mm width with a centered comb: center yarn, eight full
    # yarns, two half yarns at the edges, interfaces of near-vanishing width
    layout = discretize_ply(20.0, 10.0, 0.0, 1.0, 1e-6)
    yarns = layout.yarns
    assert len(yarns) == 11
    assert len(layout.interfaces) == 10
    center = layout.strip(0)
    assert center.band == (-0.5, 0.5)
    areas = sorted(y.polygon.area for y in yarns)
    assert areas[0] == pytest.approx(10.0, rel=1e-4)   # clipped halves
    assert areas[-1] == pytest.approx(20.0, rel=1e-6)
    total = sum(s.polygon.area for s in layout.strips)
    assert total == pytest.approx(200.0, rel=1e-9)


def test_90_degree_square_matches_0_degree():
    a = discretize_ply(10.0, 10.0, 0.0, 1.3, 1e-3)
    b = discretize_ply(10.0, 10.0, 90.0, 1.3, 1e-3)
    assert len(a.yarns) == len(b.yarns)
    assert len(a.interfaces) == len(b.interfaces)
    assert sum(s.polygon.area for s in b.strips) == pytest.approx(100.0, rel=1e-9)


def test_21_degree_ply_tiles_and_matches_oracle():
    # 25 x 10 mm ply at 21 degrees, d = 1.5, t_m = 1e-3
    layout = discretize_ply(25.0, 10.0, 21.0, 1.5, 1e-3)
    total = sum(s.polygon.area for s in layout.strips)
    assert total == pytest.approx(250.0, rel=1e-6)
    got = sorted(s.strip_index for s in layout.strips)
    assert got == oracle_strip_indices(25.0, 10.0, 21.0, 1.5, 1e-3)


def test_strip_areas_match_monte_carlo():
    from test_geometry import mc_clip_area

    layout = discretize_ply(20.0, 10.0, 30.0, 2.0, 0.01)
    strip = layout.strip(2)
    lo, hi = strip.band
    mc = mc_clip_area(20.0, 10.0, 30.0, lo, hi)
    assert strip.polygon.area == pytest.approx(mc, rel=2.5e-3)


def test_roles_alternate_and_bands_are_contiguous():
    layout = discretize_ply(20.0, 10.0, -37.0, 1.1, 0.05)
    for s in layout.strips:
        assert s.role == (ROLE_YARN if s.strip_index % 2 == 0 else ROLE_INTERFACE)
    ordered = sorted(layout.strips, key=lambda s: s.strip_index)
    for a, b in zip(ordered, ordered[1:]):
        assert b.strip_index == a.strip_index + 1
        assert b.band[0] == pytest.approx(a.band[1], abs=1e-12)


def test_centro_symmetry():
    layout = discretize_ply(14.0, 8.0, 33.0, 0.9, 0.02)
    key = lambda v: (round(v[0], 6), round(v[1], 6))
    for s in layout.strips:
        mate = layout.strip(-s.strip_index)
        assert mate is not None
        flipped = np.array(sorted(((-x, -y) for x, y in s.polygon.vertices), key=key))
        other = np.array(sorted(mate.polygon.vertices, key=key))
        assert np.allclose(flipped, other, atol=1e-9)


def test_outer_sliver_is_merged_and_reported():
    # 45-degree strips on a 2x2 square: place the outermost band edge 3e-5 mm
    # inside the far corner, leaving a triangle of ~9e-10 mm^2 (below the area
    # threshold but far wider than the snapping tolerance)
    t_m = 1e-3
    o_max = 2.0 * math.sin(math.radians(45.0))
    d = 2.0 * (o_max - 3e-5 - t_m)
    layout = discretize_ply(2.0, 2.0, 45.0, d, t_m)
    assert {k for k, _ in layout.merged_slivers} == {2, -2}
    assert all(a < TOL.area_threshold for _, a in layout.merged_slivers)
    total = sum(s.polygon.area for s in layout.strips)
    assert total == pytest.approx(4.0, rel=1e-9)
    assert max(s.strip_index for s in layout.strips) == 1


@given(
    angle=st.floats(-90.0, 90.0),
    d=st.floats(0.3, 3.0),
    t_m=st.floats(1e-3, 0.1),
    length=st.floats(2.0, 10.0),
    width=st.floats(2.0, 10.0),
)
@settings(max_examples=120, deadline=None)
def test_tiling_disjointness_and_symmetry(angle, d, t_m, length, width):
    layout = discretize_ply(length, width, angle, d, t_m)
    total = sum(s.polygon.area for s in layout.strips)
    assert total == pytest.approx(length * width, rel=1e-9)

    strips = sorted(layout.strips, key=lambda s: s.strip_index)
    for a, b in zip(strips, strips[1:]):
        assert intersection_area(a.polygon, b.polygon, TOL) < TOL.area_threshold

    indices = sorted(s.strip_index for s in layout.strips)
    assert indices == oracle_strip_indices(length, width, angle, d, t_m)
    assert indices == sorted(-k for k in indices)
