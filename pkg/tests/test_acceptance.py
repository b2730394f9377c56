"""Release acceptance: one test per shipping requirement, in order.

Each test exercises a requirement at its stated tolerance and prints a
one-line summary with the measured numbers, so a verbose run reads as the
acceptance report.  a1-a3 pin the material laws, a4-a5 the geometry and
meshing pipeline, a6-a8 the solver kinematics against closed-form and
monolith references, and a9 runs a miniature laminate to failure.

Full-specimen strength predictions are out of reach on a desk machine: a
production run takes ~1e5 explicit increments on ~1e5 elements, days of
compute.  a9 therefore substitutes a miniature two-ply coupon (6 x 4 mm)
and checks the qualitative failure signature instead: monotone dissipation,
quasi-static kinetic energy, and a single dominant load drop.
"""

import time
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from lamgen.assembly import (ROLE_MATRIX, ROLE_SEGMENT, Model, Part,
                             TieConstraint, assemble)
from lamgen.config import (LaminateSpec, PlySpec, SolverSpec,
                           load_config_file, random_laminate)
from lamgen.materials import FiberLawParams, bk_toughness, fiber_damage, \
    reduced_strength
from lamgen.meshing import (TieRealization, check_conformity, flatten_ties,
                            mesh_model)
from lamgen.report import validate_mesh, validate_model
from lamgen.solver import (_assemble_continuum, _build_patches, _chain,
                           _set_nodes, run)

from test_solver import material, rect, stack_model

ROOT = Path(__file__).resolve().parents[1]


# ------------------------------------------------------------- static probe
# a7 and a8 compare elastic stiffness and kinematics, not failure, so they
# solve the linear tied system exactly: the production continuum matrix plus
# every patch group at its initial (undamaged) stiffness.

def static_solve(mesh, mat, applied=1e-3, load_dir=(1.0, 0.0, 0.0)):
    """Exact linear solve of the tied system; returns (u_all, reaction)."""
    t_mat, base = flatten_ties(mesh)
    nb = len(base)
    pos = np.full(mesh.n_nodes, -1, dtype=int)
    pos[base] = np.arange(nb)
    k_tot, _, _ = _assemble_continuum(mesh, mat, pos, nb)
    k_tot = k_tot.tocsr(copy=True)
    for g in _build_patches(mesh, mat, t_mat):
        ns = len(g.weight)
        if not ns:
            continue
        if g.kind == "cohesive":
            k_loc = np.array([mat.penalty_normal, mat.penalty_shear,
                              mat.penalty_tear])
        else:
            k_loc = g.batch.k
        d3 = sp.kron(g.jump, sp.eye(3, format="csr"), format="csr")
        r = sp.block_diag(list(g.rot), format="csr")
        w = sp.diags(np.repeat(g.weight, 3) * np.tile(k_loc, ns))
        k_tot = (k_tot + d3.T @ r.T @ w @ r @ d3).tocsr()

    fixed = _set_nodes(mesh, "fixed-end", pos)
    loaded = _set_nodes(mesh, "loaded-end", pos)
    u = np.zeros(3 * nb)
    presc = np.zeros(3 * nb, dtype=bool)
    for c in range(3):
        presc[3 * fixed + c] = True
        presc[3 * loaded + c] = True
        u[3 * loaded + c] = applied * load_dir[c]
    free = ~presc
    u[free] = spla.spsolve(k_tot[free][:, free].tocsc(),
                           -k_tot[free][:, presc] @ u[presc])
    f = k_tot @ u
    reaction = sum(load_dir[c] * f[3 * loaded + c].sum() for c in range(3))
    return t_mat @ u.reshape(nb, 3), reaction


# --------------------------------------------------------------- a1 ... a3

def test_a1_reduced_strengths_match_reference():
    cases = [(0.0876, 5, 13.0), (0.315, 5, 24.7),
             (0.0876, 1, 29.2), (0.315, 1, 55.3)]
    got = [reduced_strength(9720.0, g, ne, 1.0) for g, ne, _ in cases]
    for s, (_, _, ref) in zip(got, cases):
        assert s == pytest.approx(ref, rel=5e-3)
    print(f"[a1] reduced strengths {[f'{s:.2f}' for s in got]} MPa "
          "vs 13.0/24.7/29.2/55.3, rel tol 0.5%")


def test_a2_fiber_law_endpoints():
    p = FiberLawParams(e11=139200.0, onset_strain=1515.0 / 139200.0,
                       ultimate_strain=0.013)
    d0 = fiber_damage(p.onset_strain, p)
    s0 = (1.0 - d0) * p.e11 * p.onset_strain
    d1 = fiber_damage(p.ultimate_strain, p)
    s1 = (1.0 - d1) * p.e11 * p.ultimate_strain
    assert abs(d0) <= 1e-6 and abs(s0 - 1515.0) <= 1e-6
    assert abs(d1 - 1.0) <= 1e-6 and abs(s1) <= 1e-6
    print(f"[a2] fiber law: D={d0:.1e} sigma={s0:.6f} MPa at onset; "
          f"D={d1} sigma={s1:.1e} at ultimate (tol 1e-6)")


def test_a3_mixed_mode_toughness_endpoints_and_midpoint():
    lo = bk_toughness(0.0876, 0.315, 2.68, 0.0)
    hi = bk_toughness(0.0876, 0.315, 2.68, 1.0)
    mid = bk_toughness(0.0876, 0.315, 2.68, 0.5)
    assert lo == 0.0876 and hi == 0.315
    assert mid == pytest.approx(0.1231, abs=1e-3)
    assert mid == pytest.approx(0.12308379585252832, rel=1e-12)
    print(f"[a3] G_C(0)={lo} G_C(1)={hi} exact; G_C(0.5)={mid:.6f} "
          "vs 0.1231 +- 1e-3")


# -------------------------------------------------- a4: geometry properties

def test_a4_randomized_geometry_suite():
    t0 = time.perf_counter()
    n_cases, worst = 200, ""
    for seed in range(n_cases):
        lam = random_laminate(seed)
        model = assemble(lam)
        rep = validate_model(model)
        assert rep.ok, f"seed {seed}: {rep.first_failure}"
        for size in (2.0, 1.0, 0.5):
            mesh = mesh_model(model, size, size)
            conf = check_conformity(mesh)
            assert conf.ok, f"seed {seed} size {size}: {conf.violations[:3]}"
        worst = f"last seed {seed}: {len(model.parts)} parts"
    wall = time.perf_counter() - t0
    assert wall < 600.0
    print(f"[a4] {n_cases} random laminates x 3 mesh sizes: tiling, overlap "
          f"and conformity clean in {wall:.0f} s ({worst})")


# ----------------------------------------------- a5: example configurations

@pytest.mark.parametrize("name", ["single-ply-21deg", "cross-pair-minus30-0",
                                  "three-ply-5mm"])
def test_a5_example_configs_end_to_end(name):
    t0 = time.perf_counter()
    cfg = load_config_file(ROOT / "configs" / f"{name}.toml")
    model = assemble(cfg.laminate, cfg.tolerances)
    rep = validate_model(model, cfg.tolerances)
    assert rep.ok, rep.first_failure
    mesh = mesh_model(model, 1.0, 1.0)
    rep = validate_mesh(mesh, tol=cfg.tolerances)
    assert rep.ok, rep.first_failure
    wall = time.perf_counter() - t0
    assert wall < 60.0
    print(f"[a5] {name}: {len(model.parts)} parts, {mesh.n_nodes} nodes, "
          f"all checks pass in {wall:.1f} s")


# -------------------------------------------------- a6: cohesive energetics

def test_a6_cohesive_dissipation_matches_toughness():
    mesh = mesh_model(stack_model(arm=0.05), 5.0, 5.0)
    res = run(mesh, material(), SolverSpec(6e-3, 6e-3, damping=2e4, frames=80),
              load_dir=(0.0, 0.0, 1.0))
    g1 = res.frames[-1].cohesive_dissipation
    assert g1 == pytest.approx(0.0876, rel=0.01)

    mesh = mesh_model(stack_model(arm=0.3), 5.0, 5.0)
    rigid = material(e11=1e6, e22=1e6, e33=1e6, g12=4e5, g13=4e5, g23=4e5,
                     nu12=0.0, nu13=0.0, nu23=0.0)
    res = run(mesh, rigid, SolverSpec(6e-3, 8e-3, damping=2e4, frames=80),
              load_dir=(1.0, 0.0, 1.0))
    gm = res.frames[-1].cohesive_dissipation
    assert gm == pytest.approx(0.12308379585252832, rel=0.02)
    print(f"[a6] mode-I dissipation {g1:.5f} N/mm (ref 0.0876, 1%); "
          f"proportional mixed {gm:.5f} (ref 0.12308, 2%)")


# ------------------------------------------- a7: matching-node jump fidelity
# A T-crack: two arms over a compliant cohesive strip on a base block, with a
# vertical pre-crack between the arms ending at the strip.  The jump across
# the crack mouth, taken on the strip's upper surface, only survives when the
# tie pairing puts nodes at the bifurcation; a generic nearest-master surface
# tie smears it over a node spacing.

_G = 0.05    # pre-crack half width
_TM = 0.02   # cohesive strip thickness
_A, _B, _H = 2.0, 1.0, 0.2


def t_crack_model(split=True):
    parts = [Part("bed", ROLE_SEGMENT, 0, 0, 0,
                  rect(-_A, _A, -_B, 0.0), (0.0, _H), 0.0)]
    films = ([("film-l", -_A, -_G), ("film-m", -_G, _G), ("film-r", _G, _A)]
             if split else [("film", -_A, _A)])
    for lb, x0, x1 in films:
        parts.append(Part(lb, ROLE_MATRIX, 0, 1, 0,
                          rect(x0, x1, 0.0, _TM), (0.0, _H), 0.0))
    parts += [Part("arm-l", ROLE_SEGMENT, 0, 2, 0,
                   rect(-_A, -_G, _TM, _B + _TM), (0.0, _H), 0.0),
              Part("arm-r", ROLE_SEGMENT, 0, 2, 1,
                   rect(_G, _A, _TM, _B + _TM), (0.0, _H), 0.0)]
    cons = [TieConstraint(("bed", "e2"), (lb, "e0")) for lb, _, _ in films]
    if split:
        cons += [TieConstraint(("arm-l", "e0"), ("film-l", "e2")),
                 TieConstraint(("arm-r", "e0"), ("film-r", "e2"))]
    else:
        cons += [TieConstraint(("arm-l", "e0"), ("film", "e2")),
                 TieConstraint(("arm-r", "e0"), ("film", "e2"))]
    return Model(2 * _A, _B + _TM, 1, False, 0.0, parts, cons,
                 face_sets={"fixed-end": [("arm-l", "e3")],
                            "loaded-end": [("arm-r", "e1")]})


def smear_film_ties(mesh):
    """Make the spanning film's upper tie deliberately non-matching: uniform
    chain with no nodes at the crack mouth, each node interpolated on its
    nearest master independently."""
    pm = mesh.part_meshes["film"]
    ids, st = _chain(pm, "e2", np.array([1.0, 0.0]))
    xs = np.linspace(st[0], st[-1], len(ids))
    pm.points2d[ids, 0] = xs
    for r in range(len(pm.rows)):
        for i, x in zip(ids, xs):
            mesh.points[pm.gid(r, int(i)), 0] = x

    chains = {}
    for lb in ("arm-l", "arm-r"):
        mpm = mesh.part_meshes[lb]
        mids, mst = _chain(mpm, "e0", np.array([1.0, 0.0]))
        chains[lb] = (mpm, mids, mst)

    kept, dropped = [], None
    for real in mesh.realizations:
        if real.constraint.slave == ("film", "e2"):
            dropped = real.constraint
        else:
            kept.append(real)

    gids, cols, vals = [], [], []
    for r in range(len(pm.rows)):
        for i, x in zip(ids, xs):
            mpm, mids, mst = chains["arm-l" if x <= 0.0 else "arm-r"]
            k = int(np.clip(np.searchsorted(mst, x) - 1, 0, len(mst) - 2))
            w = float(np.clip((x - mst[k]) / (mst[k + 1] - mst[k]), 0.0, 1.0))
            gids.append(pm.gid(r, int(i)))
            cols.append(np.array([mpm.gid(r, int(mids[k])),
                                  mpm.gid(r, int(mids[k + 1]))]))
            vals.append(np.array([1.0 - w, w]))
    kept.append(TieRealization(dropped, np.array(gids, dtype=int), cols, vals))
    mesh.realizations = kept


def crack_mouth_jump(mesh, u_all):
    def probe(label, x):
        pm = mesh.part_meshes[label]
        ids, st = _chain(pm, "e2", np.array([1.0, 0.0]))
        gid0 = np.array([pm.gid(0, int(i)) for i in ids])
        return float(np.interp(x, st, u_all[gid0, 0]))
    if "film" in mesh.part_meshes:
        return probe("film", _G) - probe("film", -_G)
    return probe("film-r", _G) - probe("film-l", -_G)


def test_a7_bifurcation_tie_preserves_crack_mouth_jump():
    mat = material(penalty_normal=2e3, penalty_shear=2e3, penalty_tear=2e3)

    def jump(split, size, doctor=False):
        mesh = mesh_model(t_crack_model(split), size, size)
        if doctor:
            smear_film_ties(mesh)
        u_all, _ = static_solve(mesh, mat)
        return crack_mouth_jump(mesh, u_all)

    ref = jump(True, 0.10)
    matched = jump(True, 0.40)
    smeared = jump(False, 0.40, doctor=True)
    rel_m = abs(matched - ref) / abs(ref)
    rel_s = abs(smeared - ref) / abs(ref)
    assert rel_m <= 0.05
    assert rel_s > 0.05
    print(f"[a7] crack-mouth jump: fine {ref:.3e} mm, matched coarse "
          f"{matched:.3e} ({rel_m:.1%}), smeared {smeared:.3e} ({rel_s:.1%})")


# --------------------------------- a8: tied assembly vs monolith elasticity
# Two same-angle plies with offset crack spacings against a single slab of
# the full thickness: the gap is the cost of every film penalty and tie in
# the assembled model, including sheared spots of the ply interface.

def test_a8_assembled_slope_close_to_monolith():
    length, width = 4.0, 3.0
    plies = (PlySpec(0.0, 0.25, 2.0, 10.0, False),
             PlySpec(0.0, 0.25, 1.4, 10.0, False))
    lam = LaminateSpec(length, width, plies,
                       yarn_cracklet_thickness=0.01,
                       matrix_interface_thickness=0.02,
                       ply_interface_thickness=1e-3)
    asm = mesh_model(assemble(lam), 0.5, 0.5)

    slab = Part("slab", ROLE_SEGMENT, 0, 0, 0,
                rect(-length / 2, length / 2, -width / 2, width / 2),
                (0.0, 0.5), 0.0)
    mono_model = Model(length, width, 1, False, 0.0, [slab], [],
                       face_sets={"fixed-end": [("slab", "e3")],
                                  "loaded-end": [("slab", "e1")]})
    mono = mesh_model(mono_model, 0.5, 0.5, ply_layers=2)

    mat = material()
    _, r_asm = static_solve(asm, mat)
    _, r_mono = static_solve(mono, mat)
    rel = abs(r_asm - r_mono) / r_mono
    assert rel <= 0.02
    print(f"[a8] axial slope: assembled {r_asm:.2f} N/mm vs monolith "
          f"{r_mono:.2f}, gap {rel:.2%} (bound 2%)")


# --------------------------------------------- a9: miniature failure run

def test_a9_miniature_coupon_fails_cleanly():
    """Full-specimen strengths and damage maps are NOT reproducible at desk
    scale (days of explicit integration); this miniature coupon is the
    stand-in.  It must fail like the real thing: dissipation never decreases,
    the response stays quasi-static to the peak, and one dominant load drop
    breaks the coupon."""
    t0 = time.perf_counter()
    cfg = load_config_file(ROOT / "configs" / "mini-failure.toml")
    model = assemble(cfg.laminate, cfg.tolerances)
    mesh = mesh_model(model, 0.5, 0.5)
    res = run(mesh, cfg.material, cfg.solver)
    wall = time.perf_counter() - t0
    assert wall <= 1800.0

    assert not res.warnings, res.warnings

    diss = np.array([f.cohesive_dissipation + f.fiber_dissipation
                     for f in res.frames])
    assert np.all(np.diff(diss) >= -1e-9)

    r = np.array([f.reaction for f in res.frames])
    peak = r.max()
    kpeak = int(r.argmax())
    pre = r[:kpeak + 1]
    assert np.max(np.maximum.accumulate(pre) - pre) <= 0.05 * peak

    drops = -np.diff(r)
    assert drops.max() >= 0.5 * peak
    broken = np.nonzero(r < 0.4 * peak)[0]
    tail = broken[broken > kpeak]
    assert tail.size and r[tail[0]:].max() < 0.5 * peak

    print("[a9] full-specimen strengths are not desk-reproducible; "
          f"miniature coupon: peak {peak:.0f} N, largest drop "
          f"{drops.max():.0f} N, dissipation monotone, no quasi-static "
          f"warnings, {wall:.0f} s")
