"""Legacy ASCII VTK export for meshed models and solver frames."""

from __future__ import annotations

import numpy as np

_CELL_TYPE = {"hex8": 12, "wedge6": 13}
_ROLE_CODE = {"YarnSegment": 0, "YarnCracklet": 1,
              "MatrixCracklet": 2, "DelaminationCracklet": 3}


def write_vtk(path, points, cells, point_data=None, cell_data=None,
              title="lamgen"):
    """cells: iterable of (kind, connectivity).  Scalars are float or int
    1D arrays; (n, 3) arrays become VECTORS."""
    cells = list(cells)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(points)} double"]
    for p in points:
        lines.append(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g}")

    size = sum(len(conn) + 1 for _, conn in cells)
    lines.append(f"CELLS {len(cells)} {size}")
    for _, conn in cells:
        lines.append(" ".join([str(len(conn))] + [str(int(i)) for i in conn]))
    lines.append(f"CELL_TYPES {len(cells)}")
    for kind, _ in cells:
        lines.append(str(_CELL_TYPE[kind]))

    for tag, data, count in (("POINT_DATA", point_data, len(points)),
                             ("CELL_DATA", cell_data, len(cells))):
        if not data:
            continue
        lines.append(f"{tag} {count}")
        for name, arr in data.items():
            arr = np.asarray(arr)
            if arr.ndim == 2:
                lines.append(f"VECTORS {name} double")
                for v in arr:
                    lines.append(f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
            else:
                kind = "int" if arr.dtype.kind in "iu" else "double"
                lines.append(f"SCALARS {name} {kind} 1")
                lines.append("LOOKUP_TABLE default")
                fmt = (lambda x: str(int(x))) if kind == "int" \
                    else (lambda x: f"{x:.9g}")
                lines.extend(fmt(x) for x in arr)

    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_mesh(mesh, path, point_data=None, part_scalars=None):
    """Meshed model with part index, role and ply as cell data.

    part_scalars maps a field name to {part label: value}; each is spread
    uniformly over the part's cells (absent labels get 0)."""
    cells, part_ids, roles, plies = [], [], [], []
    labels = []
    index = {p.label: i for i, p in enumerate(mesh.model.parts)}
    for part, kind, conn in mesh.elements():
        cells.append((kind, conn))
        part_ids.append(index[part.label])
        roles.append(_ROLE_CODE[part.role])
        plies.append(part.ply)
        labels.append(part.label)
    cell_data = {"part": np.array(part_ids),
                 "role": np.array(roles),
                 "ply": np.array(plies)}
    for name, by_label in (part_scalars or {}).items():
        cell_data[name] = np.array([by_label.get(lb, 0.0) for lb in labels])
    write_vtk(path, mesh.points, cells, point_data=point_data,
              cell_data=cell_data)


def read_vtk_counts(path):
    """Point and cell counts of a legacy VTK file (round-trip checks)."""
    pts = ncells = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("POINTS"):
                pts = int(line.split()[1])
            elif line.startswith("CELLS"):
                ncells = int(line.split()[1])
    return pts, ncells
