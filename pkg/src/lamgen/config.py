"""Layup / material / solver configuration: TOML in, dataclasses out.

The file format is a flat key/value document with one table per ply; all
lengths in mm, moduli and strengths in MPa, densities in g/cm^3, toughnesses
in N/mm, times in s.  See README for the full schema.  load_config returns
hard-validated specs plus a list of soft warnings; every hard invariant has a
dedicated error message naming the offending field.
"""

from __future__ import annotations

import random

from dataclasses import dataclass, field, asdict

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .geometry import Tolerances
from .materials import MaterialError, orthotropic_stiffness


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class PlySpec:
    angle: float              # deg, in [-90, 90], from the loading (x) axis
    thickness: float          # mm
    crack_spacing: float      # mm, matrix crack spacing d (yarn strip width)
    fracture_spacing: float   # mm, minimum spacing l between yarn cut planes
    yarn_cracklets: bool = True


@dataclass(frozen=True)
class LaminateSpec:
    length: float   # mm, x extent (loading direction)
    width: float    # mm, y extent
    plies: tuple    # tuple[PlySpec, ...], bottom to top
    yarn_cracklet_thickness: float = 1e-3    # mm, t_f
    matrix_interface_thickness: float = 1e-3  # mm, t_m
    ply_interface_thickness: float = 1e-3    # mm, t_d
    symmetric: bool = False  # plies are the bottom half; adds a z-symmetry plane record

    @property
    def ply_count(self) -> int:
        return len(self.plies)


@dataclass(frozen=True)
class MaterialSpec:
    density: float            # g/cm^3
    e11: float                # MPa
    e22: float
    e33: float
    g12: float
    g13: float
    g23: float
    nu12: float
    nu13: float
    nu23: float
    fiber_strength: float             # MPa
    fiber_ultimate_strain: float
    normal_strength: float            # MPa, unreduced interface strength
    shear_strength: float             # MPa, unreduced
    toughness_mode1: float            # N/mm
    toughness_mode2: float            # N/mm
    penalty_normal: float = 1.0e6     # N/mm^3
    penalty_shear: float = 1.0e6
    penalty_tear: float = 1.0e6
    bk_exponent: float = 2.68
    cohesive_zone_elements: int = 5   # elements across the process zone
    cohesive_element_size: float = 1.0  # mm
    reduce_strengths: bool = True     # apply the coarse-mesh strength reduction
    fiber_onset_strain: float | None = None  # defaults to fiber_strength / e11

    @property
    def onset_strain(self) -> float:
        if self.fiber_onset_strain is not None:
            return self.fiber_onset_strain
        return self.fiber_strength / self.e11

    @property
    def density_t_mm3(self) -> float:
        # 1 g/cm^3 = 1e-9 tonne/mm^3 (consistent mm-N-s-MPa system)
        return self.density * 1e-9


@dataclass(frozen=True)
class SolverSpec:
    total_displacement: float      # mm, applied at x = +L/2 along x
    duration: float                # s
    target_dt: float = 1e-6        # s, mass scaling raises density to reach it
    damping: float = 0.0           # 1/s mass-proportional
    frames: int = 400
    ke_se_limit: float = 0.05
    load_curve: tuple = ()         # ((t, fraction), ...); default smooth step over duration
    mass_scaling: str = "auto"     # "auto" or "off"
    rescale_interval: int = 10_000  # steps between stable-dt re-estimates


@dataclass
class LoadedConfig:
    laminate: LaminateSpec
    material: MaterialSpec
    solver: SolverSpec | None
    tolerances: Tolerances
    warnings: list = field(default_factory=list)


def _need(table: dict, key: str, section: str, kind=float):
    if key not in table:
        raise ConfigError(f"{section}.{key}", "missing required key")
    val = table[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{section}.{key}", f"expected a number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{section}.{key}", f"expected an integer, got {val!r}")
        return val
    if kind is bool:
        if not isinstance(val, bool):
            raise ConfigError(f"{section}.{key}", f"expected a boolean, got {val!r}")
        return val
    return val


def _opt(table: dict, key: str, section: str, default, kind=float):
    if key not in table:
        return default
    return _need(table, key, section, kind)


def _positive(value: float, name: str) -> float:
    if not value > 0.0:
        raise ConfigError(name, f"must be positive, got {value}")
    return value


def load_config(text: str) -> LoadedConfig:
    """Parse and validate a config document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("document", f"not parseable: {exc}") from exc

    warnings: list[str] = []
    lam = _parse_laminate(doc, warnings)
    mat = _parse_material(doc, warnings)
    sol = _parse_solver(doc) if "solver" in doc else None
    tol_tab = doc.get("tolerances", {})
    tolerances = Tolerances.from_env(
        **{k: _need(tol_tab, k, "tolerances") for k in
           ("coincidence_eps", "area_threshold", "angle_eps") if k in tol_tab})

    _cross_checks(lam, mat, warnings)
    return LoadedConfig(lam, mat, sol, tolerances, warnings)


def load_config_file(path) -> LoadedConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())


def _parse_laminate(doc: dict, warnings: list) -> LaminateSpec:
    if "laminate" not in doc:
        raise ConfigError("laminate", "missing [laminate] section")
    t = doc["laminate"]
    length = _positive(_need(t, "length", "laminate"), "laminate.length")
    width = _positive(_need(t, "width", "laminate"), "laminate.width")
    tf = _positive(_opt(t, "yarn_cracklet_thickness", "laminate", 1e-3), "laminate.yarn_cracklet_thickness")
    tm = _positive(_opt(t, "matrix_interface_thickness", "laminate", 1e-3), "laminate.matrix_interface_thickness")
    td = _positive(_opt(t, "ply_interface_thickness", "laminate", 1e-3), "laminate.ply_interface_thickness")
    symmetric = _opt(t, "symmetric", "laminate", False, bool)

    raw_plies = doc.get("ply", [])
    if not isinstance(raw_plies, list) or not raw_plies:
        raise ConfigError("ply", "need at least one [[ply]] table")
    plies = []
    for i, p in enumerate(raw_plies):
        sec = f"ply[{i + 1}]"
        angle = _need(p, "angle", sec)
        if not -90.0 <= angle <= 90.0:
            raise ConfigError(f"{sec}.angle", f"must lie in [-90, 90] deg, got {angle}")
        h = _positive(_need(p, "thickness", sec), f"{sec}.thickness")
        d = _positive(_need(p, "crack_spacing", sec), f"{sec}.crack_spacing")
        l = _positive(_need(p, "fracture_spacing", sec), f"{sec}.fracture_spacing")
        yc = _opt(p, "yarn_cracklets", sec, True, bool)
        if tf >= l and yc:
            raise ConfigError(f"{sec}.fracture_spacing",
                              f"yarn cracklet thickness {tf} must be smaller than fracture spacing {l}")
        if yc and tf > 0.1 * l:
            warnings.append(f"{sec}: yarn cracklet thickness {tf} exceeds fracture_spacing/10")
        if d >= min(width, length):
            warnings.append(f"{sec}: crack spacing {d} is as large as the laminate plane")
        plies.append(PlySpec(angle, h, d, l, yc))

    if tm >= min(p.crack_spacing for p in plies):
        raise ConfigError("laminate.matrix_interface_thickness",
                          "must be smaller than every ply crack_spacing")
    return LaminateSpec(length, width, tuple(plies), tf, tm, td, symmetric)


def _parse_material(doc: dict, warnings: list) -> MaterialSpec:
    if "material" not in doc:
        raise ConfigError("material", "missing [material] section")
    t = doc["material"]
    kw = dict(
        density=_positive(_need(t, "density", "material"), "material.density"),
        e11=_positive(_need(t, "e11", "material"), "material.e11"),
        e22=_positive(_need(t, "e22", "material"), "material.e22"),
        e33=_positive(_need(t, "e33", "material"), "material.e33"),
        g12=_positive(_need(t, "g12", "material"), "material.g12"),
        g13=_positive(_need(t, "g13", "material"), "material.g13"),
        g23=_positive(_need(t, "g23", "material"), "material.g23"),
        nu12=_need(t, "nu12", "material"),
        nu13=_need(t, "nu13", "material"),
        nu23=_need(t, "nu23", "material"),
        fiber_strength=_positive(_need(t, "fiber_strength", "material"), "material.fiber_strength"),
        fiber_ultimate_strain=_positive(_need(t, "fiber_ultimate_strain", "material"),
                                        "material.fiber_ultimate_strain"),
        normal_strength=_positive(_need(t, "normal_strength", "material"), "material.normal_strength"),
        shear_strength=_positive(_need(t, "shear_strength", "material"), "material.shear_strength"),
        toughness_mode1=_positive(_need(t, "toughness_mode1", "material"), "material.toughness_mode1"),
        toughness_mode2=_positive(_need(t, "toughness_mode2", "material"), "material.toughness_mode2"),
        penalty_normal=_positive(_opt(t, "penalty_normal", "material", 1.0e6), "material.penalty_normal"),
        penalty_shear=_positive(_opt(t, "penalty_shear", "material", 1.0e6), "material.penalty_shear"),
        penalty_tear=_positive(_opt(t, "penalty_tear", "material", 1.0e6), "material.penalty_tear"),
        bk_exponent=_positive(_opt(t, "bk_exponent", "material", 2.68), "material.bk_exponent"),
        cohesive_zone_elements=_opt(t, "cohesive_zone_elements", "material", 5, int),
        cohesive_element_size=_positive(_opt(t, "cohesive_element_size", "material", 1.0),
                                        "material.cohesive_element_size"),
        reduce_strengths=_opt(t, "reduce_strengths", "material", True, bool),
        fiber_onset_strain=_opt(t, "fiber_onset_strain", "material", None),
    )
    if kw["cohesive_zone_elements"] < 1:
        raise ConfigError("material.cohesive_zone_elements", "must be >= 1")

    mat = MaterialSpec(**kw)
    if not 0.0 < mat.onset_strain < mat.fiber_ultimate_strain:
        raise ConfigError("material.fiber_ultimate_strain",
                          f"onset strain {mat.onset_strain:.6g} must lie below the "
                          f"ultimate strain {mat.fiber_ultimate_strain:.6g}")
    try:
        orthotropic_stiffness(mat.e11, mat.e22, mat.e33, mat.g12, mat.g13, mat.g23,
                              mat.nu12, mat.nu13, mat.nu23)
    except MaterialError as exc:
        raise ConfigError("material", f"elastic constants rejected: {exc}") from exc

    derived = mat.fiber_strength / mat.e11
    if mat.fiber_onset_strain is not None and abs(mat.fiber_onset_strain - derived) > 0.01 * derived:
        warnings.append(
            f"material.fiber_onset_strain {mat.fiber_onset_strain:.6g} differs from "
            f"fiber_strength/e11 = {derived:.6g} by more than 1%")
    return mat


def _parse_solver(doc: dict) -> SolverSpec:
    t = doc["solver"]
    disp = _need(t, "total_displacement", "solver")
    if disp == 0.0:
        raise ConfigError("solver.total_displacement", "must be nonzero")
    duration = _positive(_need(t, "duration", "solver"), "solver.duration")
    target_dt = _positive(_opt(t, "target_dt", "solver", 1e-6), "solver.target_dt")
    damping = _opt(t, "damping", "solver", 0.0)
    if damping < 0.0:
        raise ConfigError("solver.damping", "must be >= 0")
    frames = _opt(t, "frames", "solver", 400, int)
    if frames < 1:
        raise ConfigError("solver.frames", "must be >= 1")
    ke_se = _opt(t, "ke_se_limit", "solver", 0.05)
    if not 0.0 < ke_se <= 1.0:
        raise ConfigError("solver.ke_se_limit", "must lie in (0, 1]")
    mass_scaling = _opt(t, "mass_scaling", "solver", "auto", str)
    if mass_scaling not in ("auto", "off"):
        raise ConfigError("solver.mass_scaling", f"must be 'auto' or 'off', got {mass_scaling!r}")
    rescale = _opt(t, "rescale_interval", "solver", 10_000, int)
    if rescale < 1:
        raise ConfigError("solver.rescale_interval", "must be >= 1")

    curve = t.get("load_curve", [])
    pts = []
    last_t = -1.0
    for j, pair in enumerate(curve):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ConfigError("solver.load_curve", f"entry {j} is not a [time, fraction] pair")
        tj, fj = float(pair[0]), float(pair[1])
        if tj <= last_t:
            raise ConfigError("solver.load_curve", "times must increase strictly")
        last_t = tj
        pts.append((tj, fj))
    return SolverSpec(disp, duration, target_dt, damping, frames, ke_se,
                      tuple(pts), mass_scaling, rescale)


def _cross_checks(lam: LaminateSpec, mat: MaterialSpec, warnings: list) -> None:
    for i, p in enumerate(lam.plies):
        if p.fracture_spacing > max(lam.length, lam.width) and p.yarn_cracklets:
            warnings.append(f"ply[{i + 1}]: fracture spacing exceeds the laminate plane; "
                            "long yarns will carry no cuts")


# ---------------------------------------------------------------------------
# serialization (round-trip support)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: LoadedConfig) -> str:
    """Canonical text form; load_config(dump_config(c)) == c field-for-field."""
    lam, mat, sol = cfg.laminate, cfg.material, cfg.solver
    lines = ["# lengths mm, moduli/strengths MPa, density g/cm^3, toughness N/mm, time s", ""]
    lines.append("[laminate]")
    lines.append(f"length = {_fmt(lam.length)}")
    lines.append(f"width = {_fmt(lam.width)}")
    lines.append(f"yarn_cracklet_thickness = {_fmt(lam.yarn_cracklet_thickness)}")
    lines.append(f"matrix_interface_thickness = {_fmt(lam.matrix_interface_thickness)}")
    lines.append(f"ply_interface_thickness = {_fmt(lam.ply_interface_thickness)}")
    lines.append(f"symmetric = {_fmt(lam.symmetric)}")
    for p in lam.plies:
        lines += ["", "[[ply]]"]
        lines.append(f"angle = {_fmt(p.angle)}")
        lines.append(f"thickness = {_fmt(p.thickness)}")
        lines.append(f"crack_spacing = {_fmt(p.crack_spacing)}")
        lines.append(f"fracture_spacing = {_fmt(p.fracture_spacing)}")
        lines.append(f"yarn_cracklets = {_fmt(p.yarn_cracklets)}")
    lines += ["", "[material]"]
    for k, v in asdict(mat).items():
        if v is None:
            continue
        lines.append(f"{k} = {_fmt(v)}")
    if sol is not None:
        lines += ["", "[solver]"]
        for k, v in asdict(sol).items():
            if k == "load_curve":
                if v:
                    inner = ", ".join(f"[{_fmt(a)}, {_fmt(b)}]" for a, b in v)
                    lines.append(f"load_curve = [{inner}]")
                continue
            lines.append(f"{k} = {_fmt(v) if not isinstance(v, str) else repr(v)}")
    lines += ["", "[tolerances]"]
    for k in ("coincidence_eps", "area_threshold", "angle_eps"):
        lines.append(f"{k} = {_fmt(getattr(cfg.tolerances, k))}")
    return "\n".join(lines) + "\n"

# ---------------------------------------------------------------------------
# randomized layups (property sweeps and the --seed CLI path)


def random_laminate(seed: int) -> LaminateSpec:
    """Deterministic random layup inside the supported envelope: 1-4 plies,
    angles in [-90, 90] deg, crack spacing in [0.3, 3] mm, plane <= 10x10 mm."""
    rng = random.Random(seed)
    plies = []
    for _ in range(rng.randint(1, 4)):
        plies.append(PlySpec(
            angle=rng.uniform(-90.0, 90.0),
            thickness=rng.uniform(0.1, 0.3),
            crack_spacing=rng.uniform(0.3, 3.0),
            fracture_spacing=rng.uniform(0.8, 4.0),
        ))
    d_min = min(p.crack_spacing for p in plies)
    return LaminateSpec(
        length=rng.uniform(3.0, 10.0),
        width=rng.uniform(3.0, 10.0),
        plies=tuple(plies),
        yarn_cracklet_thickness=rng.uniform(0.01, 0.05),
        matrix_interface_thickness=d_min * rng.uniform(0.03, 0.15),
        ply_interface_thickness=rng.uniform(1e-3, 5e-3),
    )
