"""Explicit quasi-static solver over yarn-segment nodes.

Only segment nodes integrate; every cracklet node rides on the flattened tie
chains, so the dynamic system is u_all = T u.  Segments carry a linear
orthotropic continuum assembled once into a global sparse stiffness; all
nonlinearity lives in the cracklet patches, which sample the displacement
jump between their two active faces through sparse operators composed with T
and feed the bilinear cohesive / fiber damage laws.

Loading is displacement control through a smooth step (or a user curve) on a
boundary node set; quasi-statics is kept honest by uniform mass scaling to
the target stable increment, mass-proportional damping, and a kinetic/strain
energy audit per frame.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import ROLE_DELAM, ROLE_MATRIX, ROLE_SEGMENT
from .config import MaterialSpec, SolverSpec
from .materials import (CohesiveBatch, CohesiveParams, FiberBatch,
                        FiberLawParams, orthotropic_stiffness,
                        reduced_strength, rotate_stiffness_z)
from .meshing import MeshedModel, flatten_ties


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Frame:
    time: float
    applied: float          # mm
    reaction: float         # N
    strain_energy: float    # N mm
    kinetic_energy: float
    cohesive_dissipation: float
    fiber_dissipation: float
    damping_loss: float
    external_work: float
    max_cohesive_damage: float
    max_fiber_damage: float

    @property
    def ke_se(self) -> float:
        return self.kinetic_energy / max(self.strain_energy, 1e-300)


@dataclass
class SolveResult:
    frames: list
    dt: float
    mass_scale: float
    warnings: list
    u_base: np.ndarray        # (nb, 3) final
    patch_damage: dict        # part label -> mean damage at end
    peak: tuple = (0.0, 0.0)  # (reaction, applied), tracked every step

    @property
    def peak_reaction(self):
        return self.peak

    @property
    def dissipated(self):
        f = self.frames[-1]
        return f.cohesive_dissipation + f.fiber_dissipation


def smooth_step(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def load_fraction(t: float, spec: SolverSpec) -> float:
    if spec.load_curve:
        ts = [p[0] for p in spec.load_curve]
        fs = [p[1] for p in spec.load_curve]
        return float(np.interp(t, ts, fs))
    return float(smooth_step(t / spec.duration))


# ------------------------------------------------------ continuum elements

_HN = np.array([[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
                [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]], dtype=float)
_G1 = 1.0 / math.sqrt(3.0)


def _hex_gauss():
    pts = [(_G1 * a, _G1 * b, _G1 * c)
           for c in (-1, 1) for b in (-1, 1) for a in (-1, 1)]
    return [(np.array(p), 1.0) for p in pts]


def _hex_grads(p):
    xi, eta, zeta = p
    g = np.empty((8, 3))
    for i, (a, b, c) in enumerate(_HN):
        g[i] = (a * (1 + b * eta) * (1 + c * zeta),
                b * (1 + a * xi) * (1 + c * zeta),
                c * (1 + a * xi) * (1 + b * eta))
    return g / 8.0


def _wedge_gauss():
    tri = [(1 / 6, 1 / 6), (2 / 3, 1 / 6), (1 / 6, 2 / 3)]
    return [(np.array([r, s, _G1 * c]), 1.0 / 6.0)
            for c in (-1, 1) for r, s in tri]


def _wedge_grads(p):
    r, s, z = p
    lo, hi = 0.5 * (1 - z), 0.5 * (1 + z)
    return np.array([
        [-lo, -lo, -0.5 * (1 - r - s)],
        [lo, 0.0, -0.5 * r],
        [0.0, lo, -0.5 * s],
        [-hi, -hi, 0.5 * (1 - r - s)],
        [hi, 0.0, 0.5 * r],
        [0.0, hi, 0.5 * s],
    ])


_QUAD = {"hex8": (_hex_gauss, _hex_grads, 8),
         "wedge6": (_wedge_gauss, _wedge_grads, 6)}


def _element_matrices(coords, c_voigt, kind):
    """Stiffness (e, 3n, 3n) and volumes (e,) for one batch of elements."""
    gauss, grads, nn = _QUAD[kind]
    ne = len(coords)
    k = np.zeros((ne, 3 * nn, 3 * nn))
    vol = np.zeros(ne)
    for p, w in gauss():
        dn = grads(p)                                    # (nn, 3)
        jac = np.einsum("enj,nb->ejb", coords, dn)       # (e, 3, 3)
        det = np.linalg.det(jac)
        if det.min() <= 0.0:
            raise SolverError("non-positive Jacobian in continuum element")
        dndx = np.einsum("nb,ebj->enj", dn, np.linalg.inv(jac))
        b = np.zeros((ne, 6, 3 * nn))
        dx, dy, dz = dndx[:, :, 0], dndx[:, :, 1], dndx[:, :, 2]
        b[:, 0, 0::3] = dx
        b[:, 1, 1::3] = dy
        b[:, 2, 2::3] = dz
        b[:, 3, 0::3] = dy
        b[:, 3, 1::3] = dx
        b[:, 4, 0::3] = dz
        b[:, 4, 2::3] = dx
        b[:, 5, 1::3] = dz
        b[:, 5, 2::3] = dy
        k += np.einsum("eiq,ij,ejr,e->eqr", b, c_voigt, b, det * w,
                       optimize=True)
        vol += det * w
    return k, vol


# ------------------------------------------------------------- patch build

@dataclass
class _PatchGroup:
    kind: str                     # "cohesive" or "fiber"
    jump: sp.csr_matrix           # (ns, nb): local jump = rot @ (jump @ u)
    rot: np.ndarray               # (ns, 3, 3) rows n, s, t
    weight: np.ndarray            # (ns,) tributary areas, mm^2
    batch: object
    labels: list                  # per sample: owning part label
    area: float = 0.0

    def force(self, u):
        if not len(self.weight):
            return 0.0
        d_glob = self.jump @ u                           # (ns, 3)
        d_loc = np.einsum("sij,sj->si", self.rot, d_glob)
        t_loc = self.batch.update(d_loc)
        t_glob = np.einsum("sji,sj->si", self.rot, t_loc)
        return self.jump.T @ (self.weight[:, None] * t_glob)

    def linear_force(self, u, k_local):
        d_glob = self.jump @ u
        d_loc = np.einsum("sij,sj->si", self.rot, d_glob)
        t_loc = k_local[None, :] * d_loc
        t_glob = np.einsum("sji,sj->si", self.rot, t_loc)
        return self.jump.T @ (self.weight[:, None] * t_glob)

    @property
    def stored(self):
        return float(self.weight @ self.batch.stored) if len(self.weight) else 0.0

    @property
    def dissipated(self):
        return float(self.weight @ self.batch.dissipated) if len(self.weight) else 0.0

    @property
    def max_damage(self):
        return float(self.batch.damage.max()) if len(self.weight) else 0.0


def _trapezoid_weights(st):
    w = np.zeros(len(st))
    gaps = np.diff(st)
    w[:-1] += 0.5 * gaps
    w[1:] += 0.5 * gaps
    return w


def _chain(pm, fid, direction):
    ids = np.asarray(pm.face_points[fid])
    st = pm.points2d[ids] @ direction
    order = np.argsort(st)
    return ids[order], st[order]


def _interp_rows(st_b, ids_b, stations):
    """Linear interpolation of a station list on a sorted master chain:
    (cols, vals) per station."""
    out = []
    for s in stations:
        k = int(np.clip(np.searchsorted(st_b, s) - 1, 0, len(st_b) - 2))
        den = st_b[k + 1] - st_b[k]
        w = float(np.clip((s - st_b[k]) / den, 0.0, 1.0)) if den > 0 else 0.0
        out.append(((ids_b[k], ids_b[k + 1]), (1.0 - w, w)))
    return out


def _side_patch(pm, parallel: bool):
    """Sample a matrix (parallel=True) or fiber cracklet between its two
    active faces.  Returns rows of (sample -> +B/-A node weights), local
    frames, tributary areas; or None when the part has no usable face pair."""
    part = pm.part
    th = math.radians(part.theta)
    u2 = np.array([math.cos(th), math.sin(th)])
    nv = np.array([-u2[1], u2[0]])
    axis, across = (u2, nv) if parallel else (nv, u2)

    faces = []
    for f, (a, b) in enumerate(part.footprint.edges()):
        e = np.array([b[0] - a[0], b[1] - a[1]])
        e /= np.hypot(*e)
        if abs(e @ axis) > math.cos(1e-6):
            faces.append(f"e{f}")
    if len(faces) != 2:
        return None
    off = [float(np.mean(pm.points2d[pm.face_points[f]] @ across)) for f in faces]
    fa, fb = (faces[0], faces[1]) if off[0] <= off[1] else (faces[1], faces[0])

    ids_a, st_a = _chain(pm, fa, axis)
    ids_b, st_b = _chain(pm, fb, axis)
    interp = _interp_rows(st_b, ids_b, st_a)
    trib = _trapezoid_weights(st_a)

    n3 = np.array([across[0], across[1], 0.0])
    s3 = np.array([axis[0], axis[1], 0.0])
    rot = np.vstack([n3, s3, [0.0, 0.0, 1.0]])

    rows = []
    h = part.thickness
    for r in range(2):
        for i, aid in enumerate(ids_a):
            cols = {pm.gid(r, aid): -1.0}
            for bid, w in zip(*interp[i]):
                cols[pm.gid(r, bid)] = cols.get(pm.gid(r, bid), 0.0) + w
            rows.append((cols, rot, trib[i] * 0.5 * h))
    return rows


def _delam_patch(pm):
    part = pm.part
    w2 = np.zeros(pm.n2)
    for cell in pm.cells:
        x = pm.points2d[list(cell), 0]
        y = pm.points2d[list(cell), 1]
        area = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        for i in cell:
            w2[i] += area / len(cell)
    rot = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    rows = []
    for i in range(pm.n2):
        rows.append(({pm.gid(1, i): 1.0, pm.gid(0, i): -1.0}, rot, w2[i]))
    return rows


def _build_patches(mesh: MeshedModel, mat: MaterialSpec, t_mat):
    tn, ts = mat.normal_strength, mat.shear_strength
    if mat.reduce_strengths:
        tn = min(tn, reduced_strength(mat.e22, mat.toughness_mode1,
                                      mat.cohesive_zone_elements,
                                      mat.cohesive_element_size))
        ts = min(ts, reduced_strength(mat.e22, mat.toughness_mode2,
                                      mat.cohesive_zone_elements,
                                      mat.cohesive_element_size))
    coh = CohesiveParams(mat.penalty_normal, mat.penalty_shear,
                         mat.penalty_tear, tn, ts, ts,
                         mat.toughness_mode1, mat.toughness_mode2,
                         mat.bk_exponent)
    fib = FiberLawParams(mat.e11, mat.onset_strain, mat.fiber_ultimate_strain)

    groups = {"cohesive": [], "fiber": []}
    for pm in mesh.part_meshes.values():
        role = pm.part.role
        if role == ROLE_SEGMENT:
            continue
        if role == ROLE_DELAM:
            rows = _delam_patch(pm)
            kind = "cohesive"
        elif role == ROLE_MATRIX:
            rows = _side_patch(pm, parallel=True)
            kind = "cohesive"
        else:
            rows = _side_patch(pm, parallel=False)
            kind = "fiber"
        if rows:
            groups[kind].append((pm.part.label, rows))

    out = []
    for kind, items in groups.items():
        coo_r, coo_c, coo_v, rots, weights, labels = [], [], [], [], [], []
        for label, rows in items:
            for cols, rot, w in rows:
                i = len(weights)
                for gid, val in cols.items():
                    coo_r.append(i), coo_c.append(gid), coo_v.append(val)
                rots.append(rot), weights.append(w), labels.append(label)
        ns = len(weights)
        if not ns:
            continue
        jump_all = sp.csr_matrix((coo_v, (coo_r, coo_c)),
                                 shape=(ns, mesh.n_nodes))
        jump = (jump_all @ t_mat).tocsr()
        batch = CohesiveBatch(ns, coh) if kind == "cohesive" \
            else FiberBatch(ns, fib, mat.g12, mat.g13)
        out.append(_PatchGroup(kind, jump, np.array(rots),
                               np.array(weights), batch, labels,
                               float(np.sum(weights))))
    return out


# ------------------------------------------------------------- node sets

def _set_nodes(mesh: MeshedModel, name: str, pos):
    pairs = mesh.model.face_sets.get(name, [])
    ids = set()
    for label, face in pairs:
        pm = mesh.part_meshes[label]
        if face in ("z-", "z+"):
            row = 0 if face == "z-" else len(pm.rows) - 1
            ids.update(pm.row_gids(row).tolist())
        else:
            for r in range(len(pm.rows)):
                ids.update(pm.gid(r, i) for i in pm.face_points[face])
    out = np.array(sorted(ids), dtype=int)
    if len(out) and (pos[out] < 0).any():
        raise SolverError(f"boundary set {name} touches slaved nodes")
    return pos[out] if len(out) else out


# ------------------------------------------------------------------ run

def run(mesh: MeshedModel, mat: MaterialSpec, spec: SolverSpec,
        fixed_set: str = "fixed-end", loaded_set: str = "loaded-end",
        load_dir=(1.0, 0.0, 0.0)) -> SolveResult:
    t_mat, base = flatten_ties(mesh)
    nb = len(base)
    pos = np.full(mesh.n_nodes, -1, dtype=int)
    pos[base] = np.arange(nb)

    k_glob, m_node, groups = _assemble_continuum(mesh, mat, pos, nb)
    patches = _build_patches(mesh, mat, t_mat)

    fixed = _set_nodes(mesh, fixed_set, pos)
    loaded = _set_nodes(mesh, loaded_set, pos)
    if not len(loaded) or not len(fixed):
        raise SolverError("empty boundary node set")
    sym = _set_nodes(mesh, "symmetry-plane", pos) \
        if mesh.model.symmetric and "symmetry-plane" in mesh.model.face_sets else None
    direction = np.asarray(load_dir, dtype=float)
    direction /= np.linalg.norm(direction)

    held = np.zeros((nb, 3), dtype=bool)
    held[fixed] = True
    held[loaded] = True

    def stiffness_apply(u):
        f = (k_glob @ u.ravel()).reshape(nb, 3)
        for g in patches:
            kl = np.array([g.batch.p.kn, g.batch.p.ks, g.batch.p.kt]) \
                if g.kind == "cohesive" else g.batch.k
            f = f + g.linear_force(u, kl)
        return f

    dt_crit = _critical_dt(stiffness_apply, m_node, held, nb)
    mass_scale = 1.0
    if spec.mass_scaling == "auto" and 0.9 * dt_crit < spec.target_dt:
        mass_scale = (spec.target_dt / (0.9 * dt_crit)) ** 2
        m_node = m_node * mass_scale
        dt = spec.target_dt
    else:
        dt = min(spec.target_dt, 0.9 * dt_crit)

    nsteps = max(spec.frames, int(math.ceil(spec.duration / dt)))
    dt = spec.duration / nsteps
    marks = np.linspace(0.0, spec.duration, spec.frames + 1)[1:]

    u = np.zeros((nb, 3))
    v = np.zeros((nb, 3))
    m3 = m_node[:, None]
    damping = spec.damping

    frames = [Frame(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)]
    warnings = []
    work = damping_loss = 0.0
    r_prev = 0.0
    applied_prev = 0.0
    next_mark = 0
    peak = (0.0, 0.0, 0.0)

    for step in range(nsteps):
        t_next = (step + 1) * dt
        f_cont = (k_glob @ u.ravel()).reshape(nb, 3)
        f_int = f_cont.copy()
        for g in patches:
            f_int += g.force(u)

        a = (-f_int - damping * m3 * v) / m3
        damping_loss += float(damping * np.sum(m3 * v * v)) * dt
        v += dt * a
        v[fixed] = 0.0
        applied = spec.total_displacement * load_fraction(t_next, spec)
        v[loaded] = ((applied - applied_prev) / dt) * direction
        if sym is not None and len(sym):
            v[sym, 2] = 0.0
        u += dt * v
        u[fixed] = 0.0
        u[loaded] = applied * direction
        if sym is not None and len(sym):
            u[sym, 2] = 0.0

        reaction = float(np.sum(f_int[loaded] @ direction))
        work += 0.5 * (r_prev + reaction) * (applied - applied_prev)
        r_prev, applied_prev = reaction, applied
        if abs(reaction) > abs(peak[0]):
            peak = (reaction, applied, t_next)

        if next_mark < len(marks) and t_next >= marks[next_mark] - 0.5 * dt:
            f_cont = (k_glob @ u.ravel()).reshape(nb, 3)
            se = 0.5 * float(np.sum(u * f_cont)) + sum(g.stored for g in patches)
            ke = 0.5 * float(np.sum(m3 * v * v))
            coh = sum(g.dissipated for g in patches if g.kind == "cohesive")
            fib = sum(g.dissipated for g in patches if g.kind == "fiber")
            frames.append(Frame(t_next, applied, reaction, se, ke, coh, fib,
                                damping_loss, work,
                                max((g.max_damage for g in patches
                                     if g.kind == "cohesive"), default=0.0),
                                max((g.max_damage for g in patches
                                     if g.kind == "fiber"), default=0.0)))
            next_mark += 1
            if not np.isfinite(u).all():
                raise SolverError(f"solution diverged at frame {next_mark}")
            bad = _inverted(groups, u)
            if bad is not None:
                raise SolverError(
                    f"element inverted in part {bad} at frame {next_mark}")

    if len(frames) < spec.frames + 1:
        f_cont = (k_glob @ u.ravel()).reshape(nb, 3)
        se = 0.5 * float(np.sum(u * f_cont)) + sum(g.stored for g in patches)
        frames.append(Frame(
            spec.duration, applied_prev, r_prev, se,
            0.5 * float(np.sum(m3 * v * v)),
            sum(g.dissipated for g in patches if g.kind == "cohesive"),
            sum(g.dissipated for g in patches if g.kind == "fiber"),
            damping_loss, work,
            max((g.max_damage for g in patches if g.kind == "cohesive"),
                default=0.0),
            max((g.max_damage for g in patches if g.kind == "fiber"),
                default=0.0)))

    se_floor = 1e-9 * max(f.strain_energy for f in frames)
    for i, f in enumerate(frames):
        if f.time > peak[2]:
            break
        if f.strain_energy > se_floor and f.ke_se > spec.ke_se_limit:
            warnings.append(
                f"frame {i}: KE/SE = {f.ke_se:.3f} exceeds "
                f"{spec.ke_se_limit} before peak load")

    damage = {}
    for g in patches:
        for label in set(g.labels):
            idx = [i for i, lb in enumerate(g.labels) if lb == label]
            damage[label] = float(np.mean(g.batch.damage[idx]))

    return SolveResult(frames, dt, mass_scale, warnings, u, damage,
                       peak[:2])


def _assemble_continuum(mesh: MeshedModel, mat: MaterialSpec, pos, nb):
    c_mat = orthotropic_stiffness(mat.e11, mat.e22, mat.e33, mat.g12,
                                  mat.g13, mat.g23, mat.nu12, mat.nu13,
                                  mat.nu23)
    rho = mat.density_t_mm3

    by_key = {}
    for pm in mesh.part_meshes.values():
        if pm.part.role != ROLE_SEGMENT:
            continue
        pts = pm.points3d()
        nlay = len(pm.rows) - 1
        for lay in range(nlay):
            for cell in pm.cells:
                conn = [pm.gid(lay, i) for i in cell] + \
                       [pm.gid(lay + 1, i) for i in cell]
                kind = "hex8" if len(cell) == 4 else "wedge6"
                by_key.setdefault((pm.part.theta, kind), []).append(
                    (pm.part.label, pos[conn],
                     pts[np.asarray(conn) - pm.offset]))

    m_node = np.zeros(nb)
    rows, cols, vals = [], [], []
    groups = []
    for (theta, kind), items in sorted(by_key.items()):
        conn = np.array([it[1] for it in items])
        coords = np.array([it[2] for it in items])
        labels = [it[0] for it in items]
        if (conn < 0).any():
            raise SolverError("segment element references a slaved node")
        c_glob = rotate_stiffness_z(c_mat, theta)
        ke, vol = _element_matrices(coords, c_glob, kind)
        nn = conn.shape[1]
        np.add.at(m_node, conn.ravel(),
                  np.repeat(rho * vol / nn, nn))
        dof = (3 * conn[:, :, None] + np.arange(3)[None, None, :]).reshape(
            len(conn), 3 * nn)
        rows.append(np.repeat(dof, 3 * nn, axis=1).ravel())
        cols.append(np.tile(dof, (1, 3 * nn)).ravel())
        vals.append(ke.ravel())
        groups.append((kind, conn, coords, labels))

    if not rows:
        raise SolverError("no yarn segments to integrate")
    k_glob = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(3 * nb, 3 * nb))
    if m_node.min() <= 0.0:
        raise SolverError("segment node without mass")
    return k_glob, m_node, groups


def _critical_dt(apply_k, m_node, held, nb, iters=60, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((nb, 3))
    v[held] = 0.0
    lam = 0.0
    for _ in range(iters):
        f = apply_k(v)
        f[held] = 0.0
        w = f / m_node[:, None]
        norm = math.sqrt(float(np.sum(w * w)))
        if norm < 1e-300:
            return math.inf
        num = float(np.sum(v * f))
        den = float(np.sum(m_node[:, None] * v * v))
        lam = max(lam, num / den if den > 0 else 0.0)
        v = w / norm
    if lam <= 0.0:
        return math.inf
    return 2.0 / math.sqrt(lam)


def _inverted(groups, u):
    for kind, conn, coords, labels in groups:
        p = coords + u[conn]
        if kind == "hex8":
            e1 = p[:, 1] - p[:, 0]
            e2 = p[:, 3] - p[:, 0]
            e3 = p[:, 4] - p[:, 0]
        else:
            e1 = p[:, 1] - p[:, 0]
            e2 = p[:, 2] - p[:, 0]
            e3 = p[:, 3] - p[:, 0]
        det = np.einsum("ei,ei->e", np.cross(e1, e2), e3)
        if det.min() <= 0.0:
            return labels[int(np.argmin(det))]
    return None


# ------------------------------------------------------------- reporting

def reaction_curve(result: SolveResult):
    return [(f.applied, f.reaction) for f in result.frames]


def energy_balance_error(result: SolveResult) -> float:
    """One-sided relative defect of the ledger at the final frame."""
    f = result.frames[-1]
    rhs = (f.strain_energy + f.kinetic_energy + f.cohesive_dissipation
           + f.fiber_dissipation + f.damping_loss)
    scale = max(abs(f.external_work), 1e-12)
    return abs(f.external_work - rhs) / scale


def write_reaction_csv(result: SolveResult, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["displacement_mm", "reaction_N"])
        for f in result.frames:
            w.writerow([f"{f.applied:.9g}", f"{f.reaction:.9g}"])


def write_energy_csv(result: SolveResult, path):
    fields = ["time", "applied", "strain_energy", "kinetic_energy",
              "cohesive_dissipation", "fiber_dissipation", "damping_loss",
              "external_work"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "applied_mm"] + fields[2:])
        for f in result.frames:
            w.writerow([f"{getattr(f, name):.9g}" for name in fields])


def displacement_field(mesh: MeshedModel, result: SolveResult) -> np.ndarray:
    """Final displacement on every mesh node (slaves included)."""
    t_mat, base = flatten_ties(mesh)
    return t_mat @ result.u_base
