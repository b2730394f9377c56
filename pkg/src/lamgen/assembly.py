"""Assemble partitioned plies into a 3D model of tied prism parts.

Each 2D cell becomes a prism at its ply's stacking slab; delamination cells
become t_d-thick prisms between slabs.  Tie constraints are generated
geometrically: side ties from coincident footprint edges within a slab,
vertical ties from footprint nesting across slabs.  Yarn segments are always
masters; among cracklets the orientation is chosen so no face is ever slave
twice (a face may master several constraints while being slave in one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import LaminateSpec
from .delam_cells import (DelaminationCrackletSet, PlyPartition,
                          build_ply_partition, partition_ply_interface)
from .geometry import ConvexPolygon, Tolerances, intersection_area, rectangle

ROLE_SEGMENT = "YarnSegment"
ROLE_FIBER = "YarnCracklet"
ROLE_MATRIX = "MatrixCracklet"
ROLE_DELAM = "DelaminationCracklet"

# greedy orientation: higher rank is slaved first; segments never
_SLAVE_RANK = {ROLE_MATRIX: 3, ROLE_DELAM: 2, ROLE_FIBER: 1, ROLE_SEGMENT: 0}

_MATERIAL = {ROLE_SEGMENT: "lamina", ROLE_FIBER: "fiber",
             ROLE_MATRIX: "cohesive", ROLE_DELAM: "cohesive"}


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class Part:
    label: str
    role: str
    ply: int                 # owning ply (lower ply for delamination parts)
    strip_index: int
    item: int
    footprint: ConvexPolygon
    z_interval: tuple
    theta: float             # ply angle; material frame for segments

    @property
    def key(self):
        return (self.ply, self.strip_index, self.item)

    @property
    def material(self):
        return _MATERIAL[self.role]

    @property
    def thickness(self):
        return self.z_interval[1] - self.z_interval[0]

    @property
    def volume(self):
        return self.footprint.area * self.thickness


@dataclass(frozen=True)
class TieConstraint:
    master: tuple  # (part label, face id)
    slave: tuple


@dataclass
class Model:
    length: float
    width: float
    ply_count: int
    symmetric: bool
    t_d: float
    parts: list
    constraints: list
    face_sets: dict = field(default_factory=dict)   # name -> [(label, face)]
    part_groups: dict = field(default_factory=dict)  # name -> [labels]
    suppressed: list = field(default_factory=list)   # (ply_below, polygon, area)

    def part(self, label: str) -> Part:
        return self._index()[label]

    def _index(self):
        if not hasattr(self, "_by_label"):
            self._by_label = {p.label: p for p in self.parts}
        return self._by_label

    @property
    def height(self):
        top = max(p.z_interval[1] for p in self.parts)
        return top


def assemble(lam: LaminateSpec, tol: Tolerances | None = None) -> Model:
    tol = tol or Tolerances()
    partitions = []
    for i, ply in enumerate(lam.plies):
        partitions.append(build_ply_partition(
            lam.length, lam.width, ply.angle, ply.crack_spacing,
            lam.matrix_interface_thickness, ply.fracture_spacing,
            lam.yarn_cracklet_thickness, i, tol, ply.yarn_cracklets))

    rect = rectangle(lam.length, lam.width)
    t_d = lam.ply_interface_thickness
    delams = [partition_ply_interface(rect, partitions[i], partitions[i + 1], tol)
              for i in range(len(partitions) - 1)]

    parts, groups, suppressed = [], {}, []
    z = 0.0
    for i, (ply, partn) in enumerate(zip(lam.plies, partitions)):
        slab = (z, z + ply.thickness)
        ply_parts = _ply_parts(i, partn, slab)
        parts.extend(ply_parts)
        groups[f"ply-{i + 1}"] = [p.label for p in ply_parts]
        z += ply.thickness
        if i < len(delams):
            dz = (z, z + t_d)
            dparts = _delam_parts(i, delams[i], dz)
            parts.extend(dparts)
            groups[f"delam-{i + 1}-{i + 2}"] = [p.label for p in dparts]
            suppressed.extend((i, poly, area) for poly, area in delams[i].suppressed)
            z += t_d

    constraints = _side_ties(parts, tol) + _vertical_ties(parts, tol)
    face_sets = _boundary_face_sets(parts, lam, tol)

    model = Model(lam.length, lam.width, len(lam.plies), lam.symmetric, t_d,
                  parts, constraints, face_sets, groups, suppressed)
    _audit_volume(model, lam, tol)
    return model


def _ply_parts(i: int, partn: PlyPartition, slab: tuple) -> list:
    theta = partn.layout.angle
    out = []
    for strip in partn.layout.strips:
        k = strip.strip_index
        yarn = partn.segmented.yarns.get(k)
        if yarn is not None:
            for j, poly in enumerate(yarn.segments):
                out.append(Part(f"ply-{i + 1}-yarn-{k:+d}-segment-{j}",
                                ROLE_SEGMENT, i, k, j, poly, slab, theta))
            for j, poly in enumerate(yarn.cracklets):
                out.append(Part(f"ply-{i + 1}-yarn-{k:+d}-cracklet-{j}",
                                ROLE_FIBER, i, k, j, poly, slab, theta))
        else:
            mset = partn.matrix_sets[k]
            for j, poly in enumerate(mset.cells):
                out.append(Part(f"ply-{i + 1}-interface-{k:+d}-cell-{j}",
                                ROLE_MATRIX, i, k, j, poly, slab, theta))
    return out


def _delam_parts(i: int, dset: DelaminationCrackletSet, slab: tuple) -> list:
    return [Part(f"interface-{i + 1}-{i + 2}-cell-{j}", ROLE_DELAM, i, 0, j,
                 poly, slab, 0.0)
            for j, poly in enumerate(dset.cells)]


def _snap_directions(parts):
    """Unit vectors of every line family in the model (ply axes and their
    normals, plus the footprint rectangle).  Edge directions recomputed from
    split vertices carry rounding noise; snapping to the family kills it and
    sidesteps the angle wrap at 0/180."""
    angles = {0.0, 90.0}
    for p in parts:
        angles.add(p.theta % 180.0)
        angles.add((p.theta + 90.0) % 180.0)
    out = []
    for a in sorted(angles):
        r = math.radians(a)
        out.append((math.cos(r), math.sin(r)))
    return out


def _side_ties(parts, tol: Tolerances) -> list:
    """One constraint per coincident-edge overlap within each z slab.

    A pair of faces abuts when the shared face area (overlap length times
    slab height) reaches area_threshold, the same rule the completeness
    oracle uses."""
    eps = tol.coincidence_eps
    dirs = _snap_directions(parts)

    edges = []
    for p in parts:
        for f, (a, b) in enumerate(p.footprint.edges()):
            dx, dy = b[0] - a[0], b[1] - a[1]
            norm = math.hypot(dx, dy)
            best = max(range(len(dirs)),
                       key=lambda i: abs(dx * dirs[i][0] + dy * dirs[i][1]))
            ux, uy = dirs[best]
            if abs(dx * ux + dy * uy) < norm * math.cos(1e-6):
                continue  # stray direction; cannot coincide with any family
            off = -uy * a[0] + ux * a[1]
            s0, s1 = ux * a[0] + uy * a[1], ux * b[0] + uy * b[1]
            edges.append((round(p.z_interval[0], 9), best, off,
                          min(s0, s1), max(s0, s1), p, f"e{f}"))

    edges.sort(key=lambda e: (e[0], e[1], e[2], e[3], e[4], e[5].key))
    ties = []
    group = []
    for e in edges:
        if group and (e[0] != group[0][0] or e[1] != group[0][1]
                      or abs(e[2] - group[-1][2]) > eps):
            _orient_group(group, ties, tol)
            group = []
        group.append(e)
    _orient_group(group, ties, tol)
    return ties


def _orient_group(group, ties, tol: Tolerances):
    """Greedy slave assignment along one carrier line, in station order."""
    if not group:
        return
    len_eps = tol.area_threshold / group[0][5].thickness
    pairs = []
    group = sorted(group, key=lambda e: (e[3], e[4], e[5].key))
    for i, a in enumerate(group):
        for b in group[i + 1:]:
            if b[3] > a[4] - len_eps:
                break  # sorted by start station; nothing later overlaps a
            if a[5] is b[5]:
                continue
            if min(a[4], b[4]) - b[3] >= len_eps:  # b starts last (sorted)
                pairs.append((b[3], min(a[4], b[4]), a, b))
    pairs.sort(key=lambda t: (t[0], t[1], t[2][5].key, t[3][5].key))

    slaved = set()
    for _, _, a, b in pairs:
        fa, fb = (a[5].label, a[6]), (b[5].label, b[6])
        ra, rb = _SLAVE_RANK[a[5].role], _SLAVE_RANK[b[5].role]
        a_free, b_free = fa not in slaved, fb not in slaved
        if ra == 0 and rb == 0:
            raise AssemblyError(
                f"yarn segments abut directly ({fa[0]} / {fb[0]}); "
                f"matrix interface thickness below geometric tolerance")
        if ra == 0 or rb == 0:
            slave, master = (fb, fa) if ra == 0 else (fa, fb)
            if slave in slaved:
                raise AssemblyError(f"cannot re-slave {slave} under {master}")
        elif a_free and b_free:
            slave, master = (fa, fb) if (ra, a[5].key) > (rb, b[5].key) else (fb, fa)
        elif a_free:
            slave, master = fa, fb
        elif b_free:
            slave, master = fb, fa
        else:
            raise AssemblyError(f"both faces already slaved: {fa} against {fb}")
        slaved.add(slave)
        ties.append(TieConstraint(master, slave))


def _vertical_ties(parts, tol: Tolerances) -> list:
    """Every delamination cell is slaved to its single host above and below."""
    by_ply = {}
    for p in parts:
        if p.role != ROLE_DELAM:
            by_ply.setdefault(p.ply, []).append(p)

    ties = []
    for p in parts:
        if p.role != ROLE_DELAM:
            continue
        below = _host(p, by_ply.get(p.ply, []), tol)
        above = _host(p, by_ply.get(p.ply + 1, []), tol)
        ties.append(TieConstraint((below.label, "z+"), (p.label, "z-")))
        ties.append(TieConstraint((above.label, "z-"), (p.label, "z+")))
    return ties


def _host(cell: Part, candidates, tol: Tolerances) -> Part:
    area = cell.footprint.area
    slack = max(1e-9 * area, 1e-12)
    cb = cell.footprint.bbox()
    hosts = []
    for p in candidates:
        pb = p.footprint.bbox()
        if pb[0] > cb[2] or pb[2] < cb[0] or pb[1] > cb[3] or pb[3] < cb[1]:
            continue
        if intersection_area(cell.footprint, p.footprint, tol) >= area - slack:
            hosts.append(p)
    if len(hosts) != 1:
        near = hosts or candidates[:1]
        raise AssemblyError(
            f"orphan face: {cell.label} z-face has {len(hosts)} hosts "
            f"(nearest: {near[0].label if near else 'none'})")
    return hosts[0]


def _boundary_face_sets(parts, lam: LaminateSpec, tol: Tolerances) -> dict:
    """Loaded/fixed end faces, on yarn segments only."""
    eps = 10.0 * tol.coincidence_eps
    sets = {"fixed-end": [], "loaded-end": []}
    for name, x_plane in (("fixed-end", -0.5 * lam.length),
                          ("loaded-end", 0.5 * lam.length)):
        for p in parts:
            if p.role != ROLE_SEGMENT:
                continue
            for f, (a, b) in enumerate(p.footprint.edges()):
                if abs(a[0] - x_plane) < eps and abs(b[0] - x_plane) < eps:
                    sets[name].append((p.label, f"e{f}"))
    if lam.symmetric:
        top = max(p.z_interval[1] for p in parts)
        sets["symmetry-plane"] = [
            (p.label, "z+") for p in parts
            if p.role == ROLE_SEGMENT and abs(p.z_interval[1] - top) < eps]
    return sets


def _audit_volume(model: Model, lam: LaminateSpec, tol: Tolerances):
    total = sum(p.volume for p in model.parts)
    holes = sum(area for _, _, area in model.suppressed) * model.t_d
    stack = sum(p.thickness for p in lam.plies) + (len(lam.plies) - 1) * model.t_d
    expect = lam.length * lam.width * stack - holes
    if abs(total - expect) > 1e-9 * expect:
        raise AssemblyError(
            f"volume audit failed: parts {total!r} vs slab {expect!r}")


# ---------------------------------------------------------------- text model

SCHEMA_VERSION = 1


def dump_model(model: Model) -> str:
    out = [f"lamgen-model {SCHEMA_VERSION}"]
    out.append(f"length {model.length!r}")
    out.append(f"width {model.width!r}")
    out.append(f"plies {model.ply_count}")
    out.append(f"symmetric {int(model.symmetric)}")
    out.append(f"t_d {model.t_d!r}")
    out.append(f"parts {len(model.parts)}")
    for p in model.parts:
        coords = " ".join(f"{x!r} {y!r}" for x, y in p.footprint.vertices)
        out.append(f"part {p.label} {p.role} {p.material} {p.ply} "
                   f"{p.strip_index} {p.item} {p.theta!r} "
                   f"{p.z_interval[0]!r} {p.z_interval[1]!r} "
                   f"{len(p.footprint.vertices)} {coords}")
    out.append(f"constraints {len(model.constraints)}")
    for c in model.constraints:
        out.append(f"tie {c.master[0]} {c.master[1]} {c.slave[0]} {c.slave[1]}")
    for name in sorted(model.face_sets):
        pairs = model.face_sets[name]
        body = " ".join(f"{lbl} {face}" for lbl, face in pairs)
        out.append(f"faceset {name} {len(pairs)} {body}".rstrip())
    for name in sorted(model.part_groups):
        labels = model.part_groups[name]
        out.append(f"group {name} {len(labels)} " + " ".join(labels))
    for ply, poly, area in model.suppressed:
        coords = " ".join(f"{x!r} {y!r}" for x, y in poly.vertices)
        out.append(f"suppressed {ply} {area!r} {len(poly.vertices)} {coords}")
    out.append("end")
    return "\n".join(out) + "\n"


def parse_model(text: str) -> Model:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("lamgen-model "):
        raise AssemblyError("not a model file")
    version = int(lines[0].split()[1])
    if version != SCHEMA_VERSION:
        raise AssemblyError(f"unsupported model schema version {version}")

    head, parts, ties, fsets, groups, supp = {}, [], [], {}, {}, []
    for ln in lines[1:]:
        tok = ln.split()
        if not tok or tok[0] == "end":
            break
        if tok[0] == "part":
            (label, role, _mat, ply, strip, item, theta, z0, z1, n) = tok[1:11]
            coords = [float(v) for v in tok[11:]]
            if len(coords) != 2 * int(n):
                raise AssemblyError(f"part {label}: bad vertex count")
            poly = ConvexPolygon(tuple(zip(coords[0::2], coords[1::2])))
            parts.append(Part(label, role, int(ply), int(strip), int(item),
                              poly, (float(z0), float(z1)), float(theta)))
        elif tok[0] == "tie":
            ties.append(TieConstraint((tok[1], tok[2]), (tok[3], tok[4])))
        elif tok[0] == "faceset":
            items = tok[3:]
            fsets[tok[1]] = [(items[i], items[i + 1])
                             for i in range(0, 2 * int(tok[2]), 2)]
        elif tok[0] == "group":
            groups[tok[1]] = tok[3:3 + int(tok[2])]
        elif tok[0] == "suppressed":
            coords = [float(v) for v in tok[4:]]
            poly = ConvexPolygon(tuple(zip(coords[0::2], coords[1::2])))
            supp.append((int(tok[1]), poly, float(tok[2])))
        else:
            head[tok[0]] = tok[1]

    return Model(float(head["length"]), float(head["width"]),
                 int(head["plies"]), bool(int(head["symmetric"])),
                 float(head["t_d"]), parts, ties, fsets, groups, supp)
