"""Command line front end: generate, mesh, plot, solve, check.

Every command is deterministic: the same config and flags produce
byte-identical model, mesh, report and plot files.  Hard invariant failures
exit nonzero naming the first failed check; warnings never change the exit
code.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .assembly import AssemblyError, assemble, dump_model, parse_model
from .config import ConfigError, load_config_file, random_laminate
from .geometry import GeometryError, Tolerances
from .meshing import MeshError, mesh_model
from .plots import svg_interface, svg_ply
from .report import validate_mesh, validate_model
from .solver import (SolverError, displacement_field, energy_balance_error,
                     run, write_energy_csv, write_reaction_csv)
from .vtkio import write_mesh


def _parser():
    ap = argparse.ArgumentParser(
        prog="lamgen",
        description="laminate crack-network model generator and mini solver")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out-dir", default=".", metavar="DIR")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap (the reference pipeline is serial)")
        return p

    g = common(sub.add_parser(
        "generate", help="config -> model file + validation report"))
    g.add_argument("--config", metavar="TOML")
    g.add_argument("--seed", type=int,
                   help="synthesize a random valid layup instead of --config")

    m = common(sub.add_parser("mesh", help="model -> conforming mesh (VTK)"))
    m.add_argument("--model", metavar="FILE")
    m.add_argument("--yarn-size", type=float, default=1.0)
    m.add_argument("--interface-size", type=float)

    p = common(sub.add_parser("plot", help="ply or interface map -> SVG"))
    p.add_argument("--model", metavar="FILE")
    p.add_argument("--ply", type=int, metavar="N")
    p.add_argument("--interface", type=int, metavar="N",
                   help="interface below ply N+1 (1-based)")

    s = common(sub.add_parser(
        "solve", help="mesh + materials -> reaction/energy history"))
    s.add_argument("--config", required=True, metavar="TOML")
    s.add_argument("--model", metavar="FILE")
    s.add_argument("--yarn-size", type=float, default=1.0)
    s.add_argument("--interface-size", type=float)
    s.add_argument("--frames", type=int)

    c = common(sub.add_parser("check", help="model -> validation report"))
    c.add_argument("--model", metavar="FILE")
    c.add_argument("--yarn-size", type=float,
                   help="also mesh at this size and check conformity")
    c.add_argument("--interface-size", type=float)
    return ap


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_model(args, out):
    path = Path(args.model) if args.model else out / "model.txt"
    return parse_model(path.read_text())


def _write_report(rep, out):
    (out / "report.json").write_text(rep.to_json())
    (out / "report.txt").write_text(rep.to_text())


def _cmd_generate(args) -> int:
    out = _out_dir(args)
    warnings = []
    if args.config:
        cfg = load_config_file(args.config)
        lam, tol = cfg.laminate, cfg.tolerances
        warnings = list(cfg.warnings)
    elif args.seed is not None:
        lam, tol = random_laminate(args.seed), Tolerances()
    else:
        raise ConfigError("config", "generate needs --config or --seed")

    model = assemble(lam, tol)
    (out / "model.txt").write_text(dump_model(model))
    rep = validate_model(model, tol)
    rep.warnings = warnings + rep.warnings
    _write_report(rep, out)
    sys.stdout.write(rep.to_text())
    return 0 if rep.ok else 1


def _cmd_mesh(args) -> int:
    out = _out_dir(args)
    model = _load_model(args, out)
    mesh = mesh_model(model, args.yarn_size,
                      args.interface_size or args.yarn_size)
    write_mesh(mesh, out / "mesh.vtk")
    print(f"mesh.vtk: {mesh.n_nodes} nodes, {mesh.stats['elements']} elements "
          f"({mesh.stats['hexes']} hex8, "
          f"{mesh.stats['elements'] - mesh.stats['hexes']} wedge6)")
    return 0


def _cmd_plot(args) -> int:
    out = _out_dir(args)
    model = _load_model(args, out)
    if (args.ply is None) == (args.interface is None):
        raise ConfigError("plot", "exactly one of --ply or --interface")
    if args.ply is not None:
        path = out / f"ply-{args.ply}.svg"
        count = svg_ply(model, args.ply, path)
    else:
        path = out / f"interface-{args.interface}-{args.interface + 1}.svg"
        count = svg_interface(model, args.interface, path)
    print(f"{path}: {count} cells")
    return 0


def _cmd_solve(args) -> int:
    out = _out_dir(args)
    cfg = load_config_file(args.config)
    if cfg.solver is None:
        raise ConfigError("solver", "config has no [solver] section")
    spec = cfg.solver
    if args.frames:
        spec = replace(spec, frames=args.frames)

    model = _load_model(args, out)
    mesh = mesh_model(model, args.yarn_size,
                      args.interface_size or args.yarn_size)
    res = run(mesh, cfg.material, spec)

    write_reaction_csv(res, out / "reaction.csv")
    write_energy_csv(res, out / "energy.csv")
    u_all = displacement_field(mesh, res)
    write_mesh(mesh, out / "state.vtk",
               point_data={"displacement": u_all},
               part_scalars={"damage": res.patch_damage})

    last = res.frames[-1]
    peak_r, peak_u = res.peak_reaction
    summary = {
        "peak_reaction_N": peak_r,
        "peak_displacement_mm": peak_u,
        "cohesive_dissipation": last.cohesive_dissipation,
        "fiber_dissipation": last.fiber_dissipation,
        "external_work": last.external_work,
        "energy_balance_error": energy_balance_error(res),
        "mass_scale": res.mass_scale,
        "dt_s": res.dt,
        "frames": len(res.frames) - 1,
        "warnings": res.warnings,
    }
    (out / "solve.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"peak reaction {peak_r:.6g} N at {peak_u:.6g} mm; "
          f"dissipated {last.cohesive_dissipation + last.fiber_dissipation:.6g} N mm; "
          f"{len(res.warnings)} warnings")
    return 0


def _cmd_check(args) -> int:
    out = _out_dir(args)
    model = _load_model(args, out)
    rep = validate_model(model)
    if rep.ok and args.yarn_size:
        mesh = mesh_model(model, args.yarn_size,
                          args.interface_size or args.yarn_size)
        validate_mesh(mesh, rep)
    _write_report(rep, out)
    sys.stdout.write(rep.to_text())
    return 0 if rep.ok else 1


_COMMANDS = {"generate": _cmd_generate, "mesh": _cmd_mesh, "plot": _cmd_plot,
             "solve": _cmd_solve, "check": _cmd_check}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, AssemblyError, GeometryError, MeshError,
            SolverError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
