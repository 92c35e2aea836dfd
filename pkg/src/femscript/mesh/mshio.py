"""Plain-text mesh files.

Format: first line `nv nt ne`; then nv lines `x y label`; then nt lines
`i j k region` with 1-based vertex indices; then ne lines `i j label`,
also 1-based.  Whitespace separated, decimal reals.
"""

import numpy as np

from .._fmt import fmt_real
from ..errors import MeshFileError
from .core import Mesh


def save_msh(mesh: Mesh, path) -> None:
    lines = [f"{mesh.nv} {mesh.nt} {mesh.ne}"]
    for (x, y), lab in zip(mesh.points, mesh.vertex_label):
        lines.append(f"{fmt_real(x)} {fmt_real(y)} {lab}")
    for (a, b, c), reg in zip(mesh.tri, mesh.region):
        lines.append(f"{a + 1} {b + 1} {c + 1} {reg}")
    for (a, b), lab in zip(mesh.edge, mesh.edge_label):
        lines.append(f"{a + 1} {b + 1} {lab}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_msh(path) -> Mesh:
    with open(path) as f:
        raw = f.read().splitlines()
    rows = [(i + 1, line.split()) for i, line in enumerate(raw) if line.split()]
    if not rows:
        raise MeshFileError("empty mesh file", line=1)

    def ints(lineno, parts, n):
        if len(parts) < n:
            raise MeshFileError(f"expected {n} fields, found {len(parts)}", line=lineno)
        try:
            return [int(p) for p in parts[:n]]
        except ValueError:
            raise MeshFileError(f"expected integer fields, found {parts[:n]}", line=lineno)

    lineno, parts = rows[0]
    nv, nt, ne = ints(lineno, parts, 3)
    if nv < 0 or nt < 0 or ne < 0:
        raise MeshFileError("negative count in header", line=lineno)
    if len(rows) - 1 != nv + nt + ne:
        raise MeshFileError(
            f"header promises {nv + nt + ne} records, file has {len(rows) - 1}",
            line=lineno)

    points = np.empty((nv, 2))
    vlab = np.empty(nv, dtype=np.int64)
    for k in range(nv):
        lineno, parts = rows[1 + k]
        if len(parts) < 3:
            raise MeshFileError("vertex needs `x y label`", line=lineno)
        try:
            points[k, 0] = float(parts[0])
            points[k, 1] = float(parts[1])
            vlab[k] = int(parts[2])
        except ValueError:
            raise MeshFileError(f"bad vertex record {parts}", line=lineno)

    tri = np.empty((nt, 3), dtype=np.int64)
    region = np.empty(nt, dtype=np.int64)
    for k in range(nt):
        lineno, parts = rows[1 + nv + k]
        i, j, l, reg = ints(lineno, parts, 4)
        if not (1 <= i <= nv and 1 <= j <= nv and 1 <= l <= nv):
            raise MeshFileError(f"triangle vertex index out of range: {parts}", line=lineno)
        tri[k] = (i - 1, j - 1, l - 1)
        region[k] = reg

    edge = np.empty((ne, 2), dtype=np.int64)
    elab = np.empty(ne, dtype=np.int64)
    for k in range(ne):
        lineno, parts = rows[1 + nv + nt + k]
        i, j, lab = ints(lineno, parts, 3)
        if not (1 <= i <= nv and 1 <= j <= nv):
            raise MeshFileError(f"edge vertex index out of range: {parts}", line=lineno)
        edge[k] = (i - 1, j - 1)
        elab[k] = lab

    try:
        return Mesh(points, tri, edge, vertex_labels=vlab, regions=region,
                    edge_labels=elab)
    except Exception as exc:
        raise MeshFileError(f"invalid mesh: {exc}") from exc
