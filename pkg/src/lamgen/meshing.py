"""Conforming hex/wedge meshes with matching nodes at crack bifurcations.

Node placement is canonical per carrier line: every footprint edge in the
model registers on its (snapped) line, the union of part vertices on a line
becomes its breakpoint set, and each sub-edge between breakpoints subdivides
as ceil(length / size - 1e-6) with the finest target size of any part using
it.  Node coordinates are computed once per line, so coincident edges of
different parts carry bitwise-identical node positions and every cracklet
corner meets a matching node on its master.

Footprints mesh as tensor grids when they are quadrilaterals (boundary
parameters from both opposite sides, transfinite interior) and as fans
otherwise.  Cracklet footprints always fan from a corner vertex: their nodes
must all lie on the tied boundary chains, because cracklets carry no mass or
stiffness of their own and every node is driven through a tie.

Tie realization claims each slave node once, in a fixed order (segment-master
side ties, then vertical ties, then cracklet-cracklet ties), and the chains
flatten to yarn-segment nodes by sparse substitution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import (ROLE_DELAM, ROLE_FIBER, ROLE_MATRIX, ROLE_SEGMENT,
                       Model, _snap_directions)
from .geometry import GeometryError, Tolerances


class MeshError(ValueError):
    pass


def canonical_count(length: float, size: float) -> int:
    return max(1, math.ceil(length / size - 1e-6))


_SIZE_ROLE = {ROLE_SEGMENT: "yarn", ROLE_FIBER: "interface",
              ROLE_MATRIX: "interface", ROLE_DELAM: "interface"}


@dataclass
class PartMesh:
    part: object
    points2d: np.ndarray        # (n2, 2)
    cells: list                 # tuples of 3 or 4 local 2D point ids, CCW
    rows: np.ndarray            # z of each node row, bottom to top
    offset: int = 0             # global id of (row 0, point 0)
    face_points: dict = field(default_factory=dict)  # "e{k}" -> 2D point ids

    @property
    def n2(self) -> int:
        return len(self.points2d)

    def gid(self, row, point_id):
        return self.offset + row * self.n2 + point_id

    def row_gids(self, row) -> np.ndarray:
        return self.offset + row * self.n2 + np.arange(self.n2)

    def points3d(self) -> np.ndarray:
        out = np.empty((len(self.rows) * self.n2, 3))
        for r, z in enumerate(self.rows):
            out[r * self.n2:(r + 1) * self.n2, :2] = self.points2d
            out[r * self.n2:(r + 1) * self.n2, 2] = z
        return out


@dataclass
class TieRealization:
    constraint: object
    slave_gids: np.ndarray
    weight_cols: list   # per slave node: np.ndarray of master gids
    weight_vals: list   # per slave node: np.ndarray of weights


@dataclass
class MeshedModel:
    model: Model
    yarn_size: float
    interface_size: float
    part_meshes: dict
    points: np.ndarray          # (N, 3) global
    realizations: list
    free_links: list            # (gid, master_gid) rigid fallback links
    stats: dict

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    def elements(self):
        """Yield (part, element type, global connectivity) for every element."""
        for pm in self.part_meshes.values():
            nlay = len(pm.rows) - 1
            for lay in range(nlay):
                for cell in pm.cells:
                    bot = [pm.gid(lay, i) for i in cell]
                    top = [pm.gid(lay + 1, i) for i in cell]
                    kind = "hex8" if len(cell) == 4 else "wedge6"
                    yield pm.part, kind, bot + top


# ----------------------------------------------------------- line registry

class _LineRegistry:
    """Canonical node stations for every carrier line in the model."""

    def __init__(self, model: Model, yarn_size: float, interface_size: float,
                 tol: Tolerances):
        self.tol = tol
        self.size = {"yarn": yarn_size, "interface": interface_size}
        dirs = _snap_directions(model.parts)

        recs = []
        for p in model.parts:
            for f, (a, b) in enumerate(p.footprint.edges()):
                dx, dy = b[0] - a[0], b[1] - a[1]
                best = max(range(len(dirs)),
                           key=lambda i: abs(dx * dirs[i][0] + dy * dirs[i][1]))
                ux, uy = dirs[best]
                if abs(dx * ux + dy * uy) < math.hypot(dx, dy) * math.cos(1e-6):
                    raise MeshError(f"edge of {p.label} lies on no known "
                                    f"line family; cannot place canonical nodes")
                off = -uy * a[0] + ux * a[1]
                sa = ux * a[0] + uy * a[1]
                sb = ux * b[0] + uy * b[1]
                recs.append([best, off, p, f, sa, sb])

        recs.sort(key=lambda r: (r[0], r[1]))
        self.lines = []   # per line: dict with u, origin, breaks, nodes
        self.edge_line = {}
        current = None
        for best, off, p, f, sa, sb in recs:
            if current is None or best != current["dir"] or \
                    off - current["off"] > tol.coincidence_eps:
                ux, uy = dirs[best]
                current = {"dir": best, "off": off, "u": (ux, uy),
                           "origin": (-uy * off, ux * off), "ends": []}
                self.lines.append(current)
            current["ends"].extend((sa, sb))
            self.edge_line[(p.label, f)] = (len(self.lines) - 1, sa, sb)

        for ln in self.lines:
            breaks = []
            for s in sorted(ln["ends"]):
                if not breaks or s - breaks[-1] > tol.coincidence_eps:
                    breaks.append(s)
            ln["breaks"] = np.array(breaks)
            ln["count"] = [0] * (len(breaks) - 1)
            ln["nodes"] = None

        self._assign_counts(model)

    def _assign_counts(self, model: Model):
        tol = self.tol
        for p in model.parts:
            size = self.size[_SIZE_ROLE[p.role]]
            for f in range(len(p.footprint.vertices)):
                li, sa, sb = self.edge_line[(p.label, f)]
                ln = self.lines[li]
                lo, hi = min(sa, sb), max(sa, sb)
                i0 = self._break_index(ln, lo)
                i1 = self._break_index(ln, hi)
                for j in range(i0, i1):
                    c = canonical_count(ln["breaks"][j + 1] - ln["breaks"][j], size)
                    ln["count"][j] = max(ln["count"][j], c)

    def _break_index(self, ln, s):
        i = int(np.searchsorted(ln["breaks"], s - 2 * self.tol.coincidence_eps))
        if i >= len(ln["breaks"]) or abs(ln["breaks"][i] - s) > 2 * self.tol.coincidence_eps:
            raise MeshError(f"edge endpoint off the break lattice at station {s}")
        return i

    def _line_nodes(self, ln):
        """station -> exact point for every node of the line (computed once)."""
        if ln["nodes"] is None:
            ux, uy = ln["u"]
            ox, oy = ln["origin"]
            nodes = {}
            br = ln["breaks"]
            for j in range(len(br) - 1):
                c = max(1, ln["count"][j])
                for k in range(1, c):
                    s = br[j] + (br[j + 1] - br[j]) * k / c
                    nodes[s] = (ox + s * ux, oy + s * uy)
            for s in br:
                nodes[s] = (ox + s * ux, oy + s * uy)
            ln["nodes"] = nodes
        return ln["nodes"]

    def edge_interior(self, label: str, f: int):
        """Interior node points of an edge, ordered from its start vertex."""
        li, sa, sb = self.edge_line[(label, f)]
        ln = self.lines[li]
        nodes = self._line_nodes(ln)
        lo, hi = min(sa, sb), max(sa, sb)
        eps = 2 * self.tol.coincidence_eps
        inside = sorted(s for s in nodes if lo + eps < s < hi - eps)
        if sa > sb:
            inside.reverse()
        return [nodes[s] for s in inside]


# -------------------------------------------------------- footprint meshing

def _boundary_loop(part, reg: _LineRegistry):
    """CCW point loop starting at vertex 0, with canonical edge interiors;
    also per-edge local id chains."""
    verts = part.footprint.vertices
    pts, ids, chains = [], {}, {}

    def add(p):
        if p not in ids:
            ids[p] = len(pts)
            pts.append(p)
        return ids[p]

    for f in range(len(verts)):
        a = verts[f]
        b = verts[(f + 1) % len(verts)]
        chain = [add(a)]
        for p in reg.edge_interior(part.label, f):
            chain.append(add(p))
        chain.append(add(b))
        chains[f"e{f}"] = np.array(chain)
    return pts, chains


def _fan_mesh(part, reg, center: str):
    """Fan triangulation; center='vertex' keeps every node on the boundary."""
    pts, chains = _boundary_loop(part, reg)
    n = len(pts)
    cells = []
    if center == "centroid":
        c = part.footprint.centroid
        ci = len(pts)
        pts = pts + [c]
        ring = list(range(n))
        for i in range(n):
            cells.append((ci, ring[i], ring[(i + 1) % n]))
    else:
        for i in range(1, n - 1):
            cells.append((0, i, i + 1))
    cells = [c for c in cells if _tri_area(pts, c) > 1e-13]
    return np.array(pts), cells, chains


def _tri_area(pts, c):
    (x0, y0), (x1, y1), (x2, y2) = pts[c[0]], pts[c[1]], pts[c[2]]
    return 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def _quad_params(chain_pts):
    """Normalized parameter of each chain node along its straight edge."""
    a, b = chain_pts[0], chain_pts[-1]
    ex, ey = b[0] - a[0], b[1] - a[1]
    den = ex * ex + ey * ey
    return [((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / den for p in chain_pts]


def _merge_params(ta, tb, eps=1e-9):
    out = []
    for t in sorted(set(ta) | set(tb)):
        if not out or t - out[-1] > eps:
            out.append(t)
    out[0], out[-1] = 0.0, 1.0
    return out


def _sample_edge(chain_pts, ts, t, eps=1e-9):
    """Point at parameter t on a chained straight edge, reusing exact node
    coordinates whenever t hits one."""
    for tk, p in zip(ts, chain_pts):
        if abs(tk - t) <= eps:
            return p
    a, b = chain_pts[0], chain_pts[-1]
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def _tensor_mesh(part, reg):
    """Transfinite grid on a 4-vertex footprint.  Returns None when any
    generated quad degenerates (caller falls back to a fan)."""
    pts, chains = _boundary_loop(part, reg)
    c0 = [pts[i] for i in chains["e0"]]
    c1 = [pts[i] for i in chains["e1"]]
    c2 = [pts[i] for i in chains["e2"]]
    c3 = [pts[i] for i in chains["e3"]]
    t0, t1 = _quad_params(c0), _quad_params(c1)
    t2, t3 = _quad_params(c2), _quad_params(c3)
    us = _merge_params(t0, [1.0 - t for t in t2])
    vs = _merge_params(t1, [1.0 - t for t in t3])

    v0, v1, v2, v3 = c0[0], c1[0], c2[0], c3[0]
    nu, nv = len(us), len(vs)
    grid = np.empty((nu, nv, 2))
    for i, u in enumerate(us):
        e0u = _sample_edge(c0, t0, u)
        e2u = _sample_edge(c2, t2, 1.0 - u)
        for j, v in enumerate(vs):
            e1v = _sample_edge(c1, t1, v)
            e3v = _sample_edge(c3, t3, 1.0 - v)
            if i == 0:
                p = e3v if j not in (0, nv - 1) else (v0 if j == 0 else v3)
            elif i == nu - 1:
                p = e1v if j not in (0, nv - 1) else (v1 if j == 0 else v2)
            elif j == 0:
                p = e0u
            elif j == nv - 1:
                p = e2u
            else:
                px = ((1 - v) * e0u[0] + v * e2u[0] + (1 - u) * e3v[0] + u * e1v[0]
                      - (1 - u) * (1 - v) * v0[0] - u * (1 - v) * v1[0]
                      - u * v * v2[0] - (1 - u) * v * v3[0])
                py = ((1 - v) * e0u[1] + v * e2u[1] + (1 - u) * e3v[1] + u * e1v[1]
                      - (1 - u) * (1 - v) * v0[1] - u * (1 - v) * v1[1]
                      - u * v * v2[1] - (1 - u) * v * v3[1])
                p = (px, py)
            grid[i, j] = p

    points = grid.reshape(-1, 2)

    def gid(i, j):
        return i * nv + j

    cells = []
    for i in range(nu - 1):
        for j in range(nv - 1):
            q = (gid(i, j), gid(i + 1, j), gid(i + 1, j + 1), gid(i, j + 1))
            x = points[list(q), 0]
            y = points[list(q), 1]
            a2 = np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
            if a2 <= 1e-13:
                return None
            cells.append(q)

    fchains = {
        "e0": np.array([gid(i, 0) for i in range(nu)]),
        "e1": np.array([gid(nu - 1, j) for j in range(nv)]),
        "e2": np.array([gid(i, nv - 1) for i in range(nu - 1, -1, -1)]),
        "e3": np.array([gid(0, j) for j in range(nv - 1, -1, -1)]),
    }
    return points, cells, fchains


def _mesh_footprint(part, reg, tol: Tolerances):
    if part.footprint.area < tol.area_threshold:
        raise MeshError(f"degenerate footprint {part.label} "
                        f"(area {part.footprint.area!r}); suppress upstream")
    if part.role in (ROLE_MATRIX, ROLE_FIBER):
        pts, cells, chains = _fan_mesh(part, reg, "vertex")
    elif len(part.footprint.vertices) == 4:
        got = _tensor_mesh(part, reg)
        if got is None:
            pts, cells, chains = _fan_mesh(part, reg, "centroid")
        else:
            pts, cells, chains = got
    else:
        pts, cells, chains = _fan_mesh(part, reg, "centroid")
    if not cells:
        raise MeshError(f"no elements for {part.label}")
    return np.asarray(pts, dtype=float), cells, chains


# ------------------------------------------------------------ realizations

def _tie_order(model: Model):
    def key(item):
        i, c = item
        if c.slave[1] in ("z+", "z-"):
            cls = 1
        elif model.part(c.master[0]).role == ROLE_SEGMENT:
            cls = 0
        else:
            cls = 2
        return (cls, i)
    return [c for _, c in sorted(enumerate(model.constraints), key=key)]


def _side_realization(c, mm, ms, claimed, tol):
    """Slave side-face nodes interpolated on the master chain, bilinear in
    (station along the line, z)."""
    m_pm, s_pm = mm, ms
    m_ids = m_pm.face_points[c.master[1]]
    s_ids = s_pm.face_points[c.slave[1]]
    a = m_pm.points2d[m_ids[0]]
    b = m_pm.points2d[m_ids[-1]]
    ux, uy = b[0] - a[0], b[1] - a[1]
    ln = math.hypot(ux, uy)
    ux, uy = ux / ln, uy / ln

    m_st = m_pm.points2d[m_ids] @ (ux, uy)
    order = np.argsort(m_st)
    m_st, m_ids = m_st[order], m_ids[order]
    s_st = s_pm.points2d[s_ids] @ (ux, uy)

    gids, cols, vals = [], [], []
    for rs, z in enumerate(s_pm.rows):
        rw = _row_weights(m_pm.rows, z)
        for sid, s in zip(s_ids, s_st):
            g = s_pm.gid(rs, sid)
            if g in claimed:
                continue
            k = int(np.clip(np.searchsorted(m_st, s) - 1, 0, len(m_st) - 2))
            den = m_st[k + 1] - m_st[k]
            w = float(np.clip((s - m_st[k]) / den, 0.0, 1.0)) if den > 0 else 0.0
            cc, vv = [], []
            for rm, wz in rw:
                if w < 1.0:
                    cc.append(m_pm.gid(rm, m_ids[k])), vv.append(wz * (1.0 - w))
                if w > 0.0:
                    cc.append(m_pm.gid(rm, m_ids[k + 1])), vv.append(wz * w)
            gids.append(g), cols.append(np.array(cc)), vals.append(np.array(vv))
    return gids, cols, vals


def _row_weights(rows, z):
    """Weights over the master's node rows for a slave node height z."""
    i = int(np.clip(np.searchsorted(rows, z) - 1, 0, len(rows) - 2))
    den = rows[i + 1] - rows[i]
    t = float(np.clip((z - rows[i]) / den, 0.0, 1.0)) if den > 0 else 0.0
    out = []
    if t < 1.0:
        out.append((i, 1.0 - t))
    if t > 0.0:
        out.append((i + 1, t))
    return out


def _vertical_realization(c, mm, ms, claimed, tol):
    """Slave z-face nodes located in the master footprint (barycentric on
    triangles; quads split along the 0-2 diagonal).  One broadcast per tie."""
    m_row = len(mm.rows) - 1 if c.master[1] == "z+" else 0
    s_row = len(ms.rows) - 1 if c.slave[1] == "z+" else 0

    tris = []
    for cell in mm.cells:
        if len(cell) == 3:
            tris.append(cell)
        else:
            tris.append((cell[0], cell[1], cell[2]))
            tris.append((cell[0], cell[2], cell[3]))
    tris = np.asarray(tris)
    sids = np.array([i for i in range(ms.n2) if ms.gid(s_row, i) not in claimed])
    if not len(sids):
        return [], [], []

    w = _barycentric_all(mm.points2d[tris], ms.points2d[sids])
    ok = (w >= -1e-7).all(axis=2)                       # (points, tris)
    if not ok.any(axis=1).all():
        miss = sids[~ok.any(axis=1)][0]
        raise MeshError(f"slave node of {c.slave[0]} at "
                        f"{tuple(ms.points2d[miss])} not inside master {c.master[0]}")
    pick = np.argmax(ok, axis=1)
    wp = np.clip(w[np.arange(len(sids)), pick], 0.0, None)
    wp /= wp.sum(axis=1, keepdims=True)

    gids = [ms.gid(s_row, i) for i in sids]
    cols = [mm.gid(m_row, tris[k]) for k in pick]
    vals = list(wp)
    return gids, cols, vals


def _barycentric_all(xy, pts):
    """Barycentric coordinates of each point in each triangle: (n, t, 3)."""
    x0, y0 = xy[:, 0, 0], xy[:, 0, 1]
    x1, y1 = xy[:, 1, 0], xy[:, 1, 1]
    x2, y2 = xy[:, 2, 0], xy[:, 2, 1]
    d = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
    d = np.where(np.abs(d) < 1e-300, np.inf, d)
    px = pts[:, 0][:, None] - x2[None, :]
    py = pts[:, 1][:, None] - y2[None, :]
    w0 = ((y1 - y2)[None, :] * px + (x2 - x1)[None, :] * py) / d[None, :]
    w1 = ((y2 - y0)[None, :] * px + (x0 - x2)[None, :] * py) / d[None, :]
    return np.stack([w0, w1, 1.0 - w0 - w1], axis=2)


# ------------------------------------------------------------------ driver

def mesh_model(model: Model, yarn_size: float, interface_size: float,
               ply_layers: int = 1, tol: Tolerances | None = None) -> MeshedModel:
    if yarn_size <= 0 or interface_size <= 0:
        raise MeshError("target sizes must be positive")
    tol = tol or Tolerances()
    reg = _LineRegistry(model, yarn_size, interface_size, tol)

    meshes, offset = {}, 0
    for p in model.parts:
        pts, cells, chains = _mesh_footprint(p, reg, tol)
        nrow = ply_layers + 1 if p.role == ROLE_SEGMENT else 2
        rows = np.linspace(p.z_interval[0], p.z_interval[1], nrow)
        pm = PartMesh(p, pts, cells, rows, offset, chains)
        meshes[p.label] = pm
        offset += pm.n2 * nrow

    points = np.vstack([meshes[p.label].points3d() for p in model.parts]) \
        if model.parts else np.zeros((0, 3))

    claimed, realizations = set(), []
    for c in _tie_order(model):
        mm, ms = meshes[c.master[0]], meshes[c.slave[0]]
        if c.slave[1] in ("z+", "z-"):
            gids, cols, vals = _vertical_realization(c, mm, ms, claimed, tol)
        elif model.part(c.master[0]).role in (ROLE_SEGMENT, ROLE_FIBER):
            gids, cols, vals = _side_realization(c, mm, ms, claimed, tol)
        else:
            # cracklet-to-cracklet ties add no kinematics: both faces are
            # already pinned through their own chains, and realizing them
            # would string corner nodes into arbitrarily deep chains
            gids, cols, vals = [], [], []
        claimed.update(gids)
        realizations.append(TieRealization(c, np.array(gids, dtype=int), cols, vals))

    free_links = _link_free_nodes(model, meshes, claimed)

    stats = {
        "nodes": len(points),
        "elements": sum(len(pm.cells) * (len(pm.rows) - 1) for pm in meshes.values()),
        "hexes": sum(sum(1 for c in pm.cells if len(c) == 4) * (len(pm.rows) - 1)
                     for pm in meshes.values()),
        "claimed": len(claimed),
        "free_links": len(free_links),
    }
    return MeshedModel(model, yarn_size, interface_size, meshes, points,
                       realizations, free_links, stats)


def _link_free_nodes(model: Model, meshes, claimed) -> list:
    """Cracklet nodes no tie claimed (clipped cells at the specimen boundary
    with a single tied chain) ride rigidly on the nearest claimed node of the
    same part, so they stay kinematically determined but transmit nothing."""
    links = []
    for p in model.parts:
        if p.role == ROLE_SEGMENT:
            continue
        pm = meshes[p.label]
        all_gids = np.concatenate([pm.row_gids(r) for r in range(len(pm.rows))])
        have = np.array([g in claimed for g in all_gids])
        if have.all():
            continue
        if not have.any():
            raise MeshError(f"part {p.label} has no tied nodes at all")
        # anchor on tie-claimed nodes only, never on another free link,
        # so chains stay shallow
        pts = pm.points3d()
        anchors = have.nonzero()[0]
        for g, free in zip(all_gids, ~have):
            if not free:
                continue
            q = pts[g - pm.offset]
            d = np.linalg.norm(pts[anchors] - q, axis=1)
            links.append((int(g), int(all_gids[anchors[np.argmin(d)]])))
            claimed.add(int(g))
    return links


def flatten_ties(mesh: MeshedModel):
    """Resolve tie chains: every node as weights over yarn-segment nodes.

    Returns (T, base_gids): T is csr of shape (n_nodes, len(base_gids));
    base nodes are the segment nodes, whose rows are unit vectors."""
    n = mesh.n_nodes
    rows, cols, vals = [], [], []
    slaved = set()
    for r in mesh.realizations:
        for g, cc, vv in zip(r.slave_gids, r.weight_cols, r.weight_vals):
            rows.extend([g] * len(cc))
            cols.extend(cc.tolist())
            vals.extend(vv.tolist())
            slaved.add(int(g))
    for g, master in mesh.free_links:
        rows.append(g), cols.append(master), vals.append(1.0)
        slaved.add(g)
    for g in range(n):
        if g not in slaved:
            rows.append(g), cols.append(g), vals.append(1.0)

    m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    base = np.array(sorted(set(range(n)) - slaved), dtype=int)
    slaved_cols = np.array(sorted(slaved), dtype=int)
    # Square to closure.  Chains stack a few levels (cracklet onto cracklet
    # onto segment, plus a free link), so the depth is small but not fixed.
    t = m
    for _ in range(6):
        if not slaved or not t[:, slaved_cols].nnz:
            break
        t = t @ t
    if slaved and t[:, slaved_cols].nnz:
        raise MeshError("tie chains did not resolve to segment nodes")
    t = t[:, base].tocsr()
    err = np.abs(np.asarray(t.sum(axis=1)).ravel() - 1.0).max() if n else 0.0
    if err > 1e-9:
        raise MeshError(f"tie weights lost partition of unity ({err})")
    return t, base


# ---------------------------------------------------------------- checking

@dataclass
class ConformityReport:
    checked: int
    violations: list  # (master label, slave label, (x, y, z), distance)

    @property
    def ok(self):
        return not self.violations


def check_conformity(mesh: MeshedModel, tol: Tolerances | None = None) -> ConformityReport:
    """Every slave-face node sitting at a bifurcation (a chain end for side
    ties, a footprint vertex on the master's boundary for vertical ties) must
    coincide with a master node."""
    tol = tol or Tolerances()
    eps = tol.coincidence_eps
    checked = 0
    bad = []
    for r in mesh.realizations:
        c = r.constraint
        mm = mesh.part_meshes[c.master[0]]
        ms = mesh.part_meshes[c.slave[0]]
        if c.slave[1] in ("z+", "z-"):
            m_row = len(mm.rows) - 1 if c.master[1] == "z+" else 0
            mpts = mesh.points[mm.row_gids(m_row)]
            s_row = len(ms.rows) - 1 if c.slave[1] == "z+" else 0
            probes = []
            for v in ms.part.footprint.vertices:
                if _on_boundary(mm.part.footprint, v, 1e-7):
                    probes.append((v[0], v[1], ms.rows[s_row]))
        else:
            m_ids = mm.face_points[c.master[1]]
            mpts = np.vstack([mesh.points[mm.gid(r_, m_ids)]
                              for r_ in range(len(mm.rows))])
            a, b = mm.points2d[m_ids[0]], mm.points2d[m_ids[-1]]
            u = np.array([b[0] - a[0], b[1] - a[1]])
            u /= np.hypot(*u)
            span = sorted(mm.points2d[[m_ids[0], m_ids[-1]]] @ u)
            s_ids = ms.face_points[c.slave[1]]
            probes = []
            for r_ in range(len(ms.rows)):
                for sid in (s_ids[0], s_ids[-1]):
                    p = mesh.points[ms.gid(r_, sid)]
                    st = p[:2] @ u
                    # a corner past the master's span bifurcates on the
                    # neighbouring master instead; skip it here
                    if span[0] - 1e-7 <= st <= span[1] + 1e-7:
                        probes.append(tuple(p))
        for q in probes:
            checked += 1
            d = np.linalg.norm(mpts - np.asarray(q), axis=1).min()
            if d > eps:
                bad.append((c.master[0], c.slave[0], q, float(d)))
    return ConformityReport(checked, bad)


def _on_boundary(poly, p, eps):
    for (ax, ay), (bx, by) in poly.edges():
        ex, ey = bx - ax, by - ay
        ln = math.hypot(ex, ey)
        t = ((p[0] - ax) * ex + (p[1] - ay) * ey) / (ln * ln)
        t = min(1.0, max(0.0, t))
        qx, qy = ax + t * ex, ay + t * ey
        if math.hypot(p[0] - qx, p[1] - qy) <= eps:
            return True
    return False
