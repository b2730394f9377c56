"""Generate, validate, mesh and plot one laminate config.

Usage: python3 scripts/partition_demo.py [config.toml] [out_dir]
Defaults to the three-ply demo config and ./out-demo.
"""

import sys
from pathlib import Path

from lamgen.assembly import assemble, dump_model
from lamgen.config import load_config_file
from lamgen.meshing import mesh_model
from lamgen.plots import svg_interface, svg_ply
from lamgen.report import validate_mesh, validate_model
from lamgen.vtkio import write_mesh


def main(argv):
    root = Path(__file__).resolve().parents[1]
    cfg_path = Path(argv[1]) if len(argv) > 1 else root / "configs" / "three-ply-5mm.toml"
    out = Path(argv[2]) if len(argv) > 2 else Path("out-demo")
    out.mkdir(parents=True, exist_ok=True)

    cfg = load_config_file(cfg_path)
    model = assemble(cfg.laminate, cfg.tolerances)
    (out / "model.txt").write_text(dump_model(model))
    print(f"{cfg_path.name}: {len(model.parts)} parts, "
          f"{len(model.constraints)} ties")

    mesh = mesh_model(model, 0.5, 0.5)
    write_mesh(mesh, out / "mesh.vtk")
    print(f"mesh: {mesh.n_nodes} nodes, {mesh.stats['elements']} elements")

    for ply in range(1, model.ply_count + 1):
        n = svg_ply(model, ply, out / f"ply-{ply}.svg")
        print(f"ply-{ply}.svg: {n} cells")
    for below in range(1, model.ply_count):
        n = svg_interface(model, below, out / f"interface-{below}-{below + 1}.svg")
        print(f"interface-{below}-{below + 1}.svg: {n} cells")

    rep = validate_model(model, cfg.tolerances)
    validate_mesh(mesh, rep)
    (out / "report.txt").write_text(rep.to_text())
    print(rep.to_text().splitlines()[-1])
    return 0 if rep.ok else 1


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
