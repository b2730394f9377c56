"""Validation report: hard invariants and soft warnings over a model.

Hard checks (any failure makes the report fail): per-ply and per-interface
tiling residuals, pairwise footprint overlaps inside a layer, the constraint
audit (every abutting face pair re-derived from geometry must have its tie,
and no tie may reference a non-abutting pair), the suppression floor, and,
when a mesh is supplied, tie-chain closure and the conformity probe.

Soft warnings never fail the report: suppressed-cell log entries and yarn
strips that carry no fracture plane (unbreakable yarns).
"""

import json
from dataclasses import dataclass, field

from .assembly import (ROLE_FIBER, ROLE_SEGMENT, Model,
                       _side_ties, _vertical_ties)
from .geometry import DirectedLine, Tolerances, split_convex
from .meshing import MeshError, check_conformity, flatten_ties


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), str(detail)))

    def first_failure(self):
        for c in self.checks:
            if not c.passed:
                return c
        return None

    def to_json(self) -> str:
        return json.dumps(
            {"ok": self.ok,
             "checks": [{"name": c.name, "passed": c.passed,
                         "detail": c.detail} for c in self.checks],
             "warnings": list(self.warnings)},
            indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name}"
                 + (f": {c.detail}" if c.detail else "")
                 for c in self.checks]
        lines += [f"warning: {w}" for w in self.warnings]
        lines.append(f"result: {'ok' if self.ok else 'FAILED'}")
        return "\n".join(lines) + "\n"


def _intersection_area(a, b, tol):
    piece = a
    for p, q in b.edges():
        piece, _ = split_convex(piece, DirectedLine.through(p, q), tol)
        if piece is None:
            return 0.0
    return piece.area


def _overlap_violations(parts, tol):
    boxes = [p.footprint.bbox() for p in parts]
    bad = []
    for i in range(len(parts)):
        x0, y0, x1, y1 = boxes[i]
        for j in range(i + 1, len(parts)):
            u0, v0, u1, v1 = boxes[j]
            if u0 >= x1 or x0 >= u1 or v0 >= y1 or y0 >= v1:
                continue
            area = _intersection_area(parts[i].footprint,
                                      parts[j].footprint, tol)
            if area > tol.area_threshold:
                bad.append((parts[i].label, parts[j].label, area))
    return bad


def validate_model(model: Model, tol: Tolerances | None = None) -> ValidationReport:
    tol = tol or Tolerances()
    rep = ValidationReport()
    plan_area = model.length * model.width

    for name in sorted(model.part_groups):
        labels = model.part_groups[name]
        covered = sum(model.part(lb).footprint.area for lb in labels)
        if name.startswith("delam-"):
            below = int(name.split("-")[1]) - 1
            covered += sum(a for ply, _, a in model.suppressed if ply == below)
        res = abs(covered - plan_area) / plan_area
        rep.add(f"tiling {name}", res < 1e-9, f"residual {res:.3e}")

    for name in sorted(model.part_groups):
        parts = [model.part(lb) for lb in model.part_groups[name]]
        bad = _overlap_violations(parts, tol)
        detail = f"{len(parts)} parts"
        if bad:
            a, b, area = bad[0]
            detail = f"{len(bad)} overlapping pairs, e.g. {a}/{b} area {area:.3e}"
        rep.add(f"overlaps {name}", not bad, detail)

    expected = {(c.master, c.slave) if c.master <= c.slave else (c.slave, c.master)
                for c in _side_ties(model.parts, tol) + _vertical_ties(model.parts, tol)}
    actual = {(c.master, c.slave) if c.master <= c.slave else (c.slave, c.master)
              for c in model.constraints}
    missing = expected - actual
    extra = actual - expected
    if missing:
        (la, fa), (lb, fb) = sorted(missing)[0]
        detail = (f"orphan face: {la}.{fa} / {lb}.{fb} untied "
                  f"({len(missing)} missing)")
    elif extra:
        (la, fa), (lb, fb) = sorted(extra)[0]
        detail = f"tie {la}.{fa} / {lb}.{fb} matches no abutting faces"
    else:
        detail = f"{len(actual)} ties match the derived abutment set"
    rep.add("constraint audit", not missing and not extra, detail)

    known = {(p.label, f"e{k}") for p in model.parts
             for k in range(len(p.footprint.vertices))}
    known |= {(p.label, z) for p in model.parts for z in ("z-", "z+")}
    dangling = [(name, lb, face) for name, pairs in model.face_sets.items()
                for lb, face in pairs if (lb, face) not in known]
    rep.add("face sets", not dangling,
            f"{len(dangling)} dangling references" if dangling
            else f"{sum(len(v) for v in model.face_sets.values())} faces")

    oversize = [(ply, a) for ply, _, a in model.suppressed
                if a >= tol.area_threshold]
    rep.add("suppression floor", not oversize,
            f"{len(model.suppressed)} cells suppressed")
    for ply, poly, area in model.suppressed:
        cx, cy = poly.centroid
        rep.warnings.append(
            f"interface {ply + 1}-{ply + 2}: suppressed cell "
            f"area {area:.3e} near ({cx:.3f}, {cy:.3f})")

    for name in sorted(model.part_groups):
        if not name.startswith("ply-"):
            continue
        parts = [model.part(lb) for lb in model.part_groups[name]]
        yarn_strips = {p.strip_index for p in parts if p.role == ROLE_SEGMENT
                       and p.strip_index % 2 == 0}
        cut_strips = {p.strip_index for p in parts if p.role == ROLE_FIBER}
        for k in sorted(yarn_strips - cut_strips):
            rep.warnings.append(
                f"{name}: yarn strip {k} has no fracture plane "
                f"(unbreakable yarn)")
    return rep


def validate_mesh(mesh, rep: ValidationReport | None = None,
                  tol: Tolerances | None = None) -> ValidationReport:
    tol = tol or Tolerances()
    rep = rep if rep is not None else ValidationReport()

    conf = check_conformity(mesh, tol)
    detail = f"{conf.checked} probes"
    if conf.violations:
        mlabel, slabel, xyz, dist = conf.violations[0]
        detail = (f"{len(conf.violations)} violations, e.g. {slabel} node at "
                  f"{tuple(round(v, 6) for v in xyz)} off {mlabel} by {dist:.3e}")
    rep.add("conformity", conf.ok, detail)

    try:
        t_mat, base = flatten_ties(mesh)
        rep.add("tie closure", True,
                f"{mesh.n_nodes} nodes onto {len(base)} masters")
    except MeshError as err:
        rep.add("tie closure", False, str(err))

    expect = sum(p.volume for p in mesh.model.parts)
    vol = sum(_footprint_area(pm) * pm.part.thickness
              for pm in mesh.part_meshes.values())
    res = abs(vol - expect) / expect
    rep.add("mesh volume", res < 1e-6, f"residual {res:.3e}")
    return rep


def _footprint_area(pm):
    total = 0.0
    pts = pm.points2d
    for cell in pm.cells:
        n = len(cell)
        x = pts[list(cell), 0]
        y = pts[list(cell), 1]
        s = 0.0
        for i in range(n):
            s += x[i] * y[(i + 1) % n] - x[(i + 1) % n] * y[i]
        total += 0.5 * s
    return total
