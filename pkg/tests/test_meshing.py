"""Meshing: canonical subdivision, conformity, tie realization, flattening.

The canonical-count oracle and the 1x20 structured-grid node counts are
arithmetic, frozen here before the mesher existed.  Conformity and coverage
checks run on a full single-ply model.
"""

import math

import numpy as np
import pytest

from lamgen.assembly import (ROLE_FIBER, ROLE_MATRIX, ROLE_SEGMENT,
                             Model, Part, TieConstraint, assemble)
from lamgen.config import LaminateSpec, PlySpec
from lamgen.geometry import ConvexPolygon, Tolerances, rectangle
from lamgen.meshing import (MeshError, canonical_count, check_conformity,
                            flatten_ties, mesh_model)

TOL = Tolerances()


def ply_model(length=25.0, width=10.0, angle=21.0, d=1.5, l=5.0):
    lam = LaminateSpec(length, width, (PlySpec(angle, 0.2, d, l),),
                       yarn_cracklet_thickness=0.1,
                       matrix_interface_thickness=0.05,
                       ply_interface_thickness=0.005)
    return assemble(lam)


def quad_part(label, role, pts, z=(0.0, 0.2), theta=0.0):
    return Part(label, role, 0, 0, 0, ConvexPolygon.build(pts), z, theta)


def strip_pair_model():
    """A segment with a matrix strip on top of it in plan, sharing y=1."""
    a = quad_part("a", ROLE_SEGMENT, [(0, 0), (7.3, 0), (7.3, 1), (0, 1)])
    b = quad_part("b", ROLE_MATRIX, [(0, 1), (7.3, 1), (7.3, 2), (0, 2)])
    tie = TieConstraint(("a", "e2"), ("b", "e0"))
    return Model(7.3, 2.0, 1, False, 0.0, [a, b], [tie])


def test_canonical_count_examples():
    assert canonical_count(7.3, 1.0) == 8
    assert canonical_count(20.0, 1.0) == 20
    assert canonical_count(1.0, 1.0) == 1
    assert canonical_count(0.05, 1.0) == 1
    assert canonical_count(3.0 + 1e-10, 1.0) == 3  # slack absorbs noise


def test_single_yarn_structured_grid():
    part = quad_part("yarn", ROLE_SEGMENT,
                     [(-10, -0.5), (10, -0.5), (10, 0.5), (-10, 0.5)])
    model = Model(20.0, 1.0, 1, False, 0.0, [part], [])
    mesh = mesh_model(model, 1.0, 1.0)
    pm = mesh.part_meshes["yarn"]
    assert pm.n2 == 42
    assert len(pm.cells) == 20 and all(len(c) == 4 for c in pm.cells)
    long_edges = [pm.face_points["e0"], pm.face_points["e2"]]
    assert [len(e) for e in long_edges] == [21, 21]
    assert mesh.stats["elements"] == 20 and mesh.stats["hexes"] == 20


def test_shared_edge_identical_sequences():
    mesh = mesh_model(strip_pair_model(), 1.0, 1.0)
    am, bm = mesh.part_meshes["a"], mesh.part_meshes["b"]
    xa = sorted(am.points2d[am.face_points["e2"]][:, 0].tolist())
    xb = sorted(bm.points2d[bm.face_points["e0"]][:, 0].tolist())
    assert len(xa) == len(xb) == 9
    assert xa == xb  # bitwise, not approximately

    # nodes coincide, so every realized weight is a unit pairing
    r = mesh.realizations[0]
    assert len(r.slave_gids) == 2 * 9
    for cols, vals in zip(r.weight_cols, r.weight_vals):
        assert len(cols) == 1 and vals[0] == pytest.approx(1.0)


def test_matrix_strip_free_side_is_linked():
    mesh = mesh_model(strip_pair_model(), 1.0, 1.0)
    assert mesh.stats["free_links"] > 0
    linked = {g for g, _ in mesh.free_links}
    bm = mesh.part_meshes["b"]
    tied = set(bm.gid(0, i) for i in bm.face_points["e0"])
    assert not (linked & tied)
    t, base = flatten_ties(mesh)
    am = mesh.part_meshes["a"]
    assert set(base.tolist()) == set(range(am.offset, am.offset + 2 * am.n2))


def test_ply_mesh_conformity_and_coverage():
    model = ply_model()
    mesh = mesh_model(model, 1.0, 1.0)

    report = check_conformity(mesh)
    assert report.checked > 100
    assert report.ok, report.violations[:5]

    for pm in mesh.part_meshes.values():
        areas = [_cell_area(pm.points2d, c) for c in pm.cells]
        assert min(areas) > 0.0
        np.testing.assert_allclose(sum(areas), pm.part.footprint.area,
                                   rtol=1e-9, atol=1e-12)

    vol = sum(_cell_area(pm.points2d, c) * pm.part.thickness
              for pm in mesh.part_meshes.values() for c in pm.cells)
    want = sum(p.volume for p in model.parts)
    np.testing.assert_allclose(vol, want, rtol=1e-6)


def test_cracklet_meshes_have_no_interior_nodes():
    mesh = mesh_model(ply_model(), 1.0, 1.0)
    for pm in mesh.part_meshes.values():
        if pm.part.role not in (ROLE_MATRIX, ROLE_FIBER):
            continue
        for p in pm.points2d:
            assert _boundary_distance(pm.part.footprint, p) < 1e-9


def test_all_nonsegment_nodes_resolve_to_segments():
    model = ply_model(length=12.0, width=8.0)
    mesh = mesh_model(model, 1.0, 0.8)
    t, base = flatten_ties(mesh)
    seg_gids = set()
    for pm in mesh.part_meshes.values():
        if pm.part.role == ROLE_SEGMENT:
            for r in range(len(pm.rows)):
                seg_gids.update(pm.row_gids(r).tolist())
    assert set(base.tolist()) == seg_gids
    assert t.shape == (mesh.n_nodes, len(base))
    sums = np.asarray(t.sum(axis=1)).ravel()
    np.testing.assert_allclose(sums, 1.0, atol=1e-9)


def test_two_ply_vertical_realization():
    lam = LaminateSpec(8.0, 6.0,
                       (PlySpec(21.0, 0.2, 1.5, 5.0), PlySpec(-35.0, 0.2, 1.0, 3.0)),
                       yarn_cracklet_thickness=0.1,
                       matrix_interface_thickness=0.05,
                       ply_interface_thickness=0.005)
    model = assemble(lam)
    mesh = mesh_model(model, 1.0, 1.0)
    report = check_conformity(mesh)
    assert report.ok, report.violations[:5]

    # every delamination node is claimed by a vertical tie on each z face
    vertical = [r for r in mesh.realizations
                if r.constraint.slave[1] in ("z+", "z-")]
    claimed = set()
    for r in vertical:
        claimed.update(r.slave_gids.tolist())
    for pm in mesh.part_meshes.values():
        if pm.part.role == "DelaminationCracklet":
            for row in range(2):
                assert set(pm.row_gids(row).tolist()) <= claimed

    t, base = flatten_ties(mesh)
    sums = np.asarray(t.sum(axis=1)).ravel()
    np.testing.assert_allclose(sums, 1.0, atol=1e-9)


def test_perturbed_node_single_violation():
    mesh = mesh_model(strip_pair_model(), 1.0, 1.0)
    assert check_conformity(mesh).ok
    bm = mesh.part_meshes["b"]
    corner = bm.gid(0, bm.face_points["e0"][0])
    mesh.points[corner, 0] += 1e-3
    report = check_conformity(mesh)
    assert len(report.violations) == 1
    assert report.violations[0][3] == pytest.approx(1e-3, rel=1e-6)


def test_element_count_scales_with_size():
    model = ply_model(length=10.0, width=8.0)
    n1 = mesh_model(model, 1.0, 1.0).stats["elements"]
    n05 = mesh_model(model, 0.5, 0.5).stats["elements"]
    assert 2.0 < n05 / n1 < 6.0


def test_determinism():
    model = ply_model(length=8.0, width=6.0)
    m1 = mesh_model(model, 1.0, 1.0)
    m2 = mesh_model(model, 1.0, 1.0)
    assert np.array_equal(m1.points, m2.points)
    for r1, r2 in zip(m1.realizations, m2.realizations):
        assert np.array_equal(r1.slave_gids, r2.slave_gids)


def test_degenerate_footprint_rejected():
    sliver = quad_part("s", ROLE_SEGMENT,
                       [(0, 0), (1e-5, 0), (1e-5, 1e-5), (0, 1e-5)])
    model = Model(1.0, 1.0, 1, False, 0.0, [sliver], [])
    with pytest.raises(MeshError, match="degenerate"):
        mesh_model(model, 1.0, 1.0)


def test_bad_sizes_rejected():
    with pytest.raises(MeshError):
        mesh_model(strip_pair_model(), 0.0, 1.0)


def _cell_area(pts, cell):
    x = pts[list(cell), 0]
    y = pts[list(cell), 1]
    return 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _boundary_distance(poly, p):
    best = math.inf
    for (ax, ay), (bx, by) in poly.edges():
        ex, ey = bx - ax, by - ay
        t = min(1.0, max(0.0, ((p[0] - ax) * ex + (p[1] - ay) * ey) /
                         (ex * ex + ey * ey)))
        best = min(best, math.hypot(p[0] - ax - t * ex, p[1] - ay - t * ey))
    return best
