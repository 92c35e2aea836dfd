"""Triangular mesh container plus the structured-grid constructor.

A mesh is immutable once built: vertex coordinates, triangle connectivity
and labeled boundary edges live in read-only numpy arrays, and derived
geometry (areas, basis gradients, adjacency) is cached lazily.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import FoldOverError, InvalidArgumentError


@dataclass(frozen=True)
class Vertex:
    x: float
    y: float
    label: int = 0


@dataclass(frozen=True)
class Triangle:
    v: tuple  # three vertex indices, counter-clockwise
    region: int = 0


@dataclass(frozen=True)
class BoundaryEdge:
    v: tuple  # two vertex indices
    label: int = 0


class Mesh:
    """2D conforming triangulation with integer-labeled boundary edges."""

    def __init__(self, points, triangles, edges, *, vertex_labels=None,
                 regions=None, edge_labels=None, validate=True):
        self.points = np.ascontiguousarray(points, dtype=float)
        self.tri = np.ascontiguousarray(triangles, dtype=np.int64)
        edges = np.asarray(edges, dtype=np.int64)
        self.edge = edges.reshape(-1, 2)
        if vertex_labels is None:
            vertex_labels = np.zeros(len(self.points), dtype=np.int64)
        if regions is None:
            regions = np.zeros(len(self.tri), dtype=np.int64)
        if edge_labels is None:
            edge_labels = np.zeros(len(self.edge), dtype=np.int64)
        self.vertex_label = np.ascontiguousarray(vertex_labels, dtype=np.int64)
        self.region = np.ascontiguousarray(regions, dtype=np.int64)
        self.edge_label = np.ascontiguousarray(edge_labels, dtype=np.int64)
        if validate:
            self._validate()
        for arr in (self.points, self.tri, self.edge, self.vertex_label,
                    self.region, self.edge_label):
            arr.setflags(write=False)
        self._cache = {}

    # -- basic counts ----------------------------------------------------

    @property
    def nv(self):
        return len(self.points)

    @property
    def nt(self):
        return len(self.tri)

    @property
    def ne(self):
        return len(self.edge)

    def vertex(self, i) -> Vertex:
        x, y = self.points[i]
        return Vertex(float(x), float(y), int(self.vertex_label[i]))

    def triangle(self, k) -> Triangle:
        return Triangle(tuple(int(v) for v in self.tri[k]), int(self.region[k]))

    def boundary_edge(self, k) -> BoundaryEdge:
        return BoundaryEdge(tuple(int(v) for v in self.edge[k]), int(self.edge_label[k]))

    def __repr__(self):
        return f"Mesh(nv={self.nv}, nt={self.nt}, ne={self.ne})"

    # -- validation ------------------------------------------------------

    def _validate(self):
        if not np.all(np.isfinite(self.points)):
            raise InvalidArgumentError("mesh has non-finite vertex coordinates")
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise InvalidArgumentError("points must have shape (nv, 2)")
        if self.tri.size and (self.tri.min() < 0 or self.tri.max() >= self.nv):
            raise InvalidArgumentError("triangle vertex index out of range")
        if self.edge.size and (self.edge.min() < 0 or self.edge.max() >= self.nv):
            raise InvalidArgumentError("boundary edge vertex index out of range")
        t = self.tri
        if t.size and ((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])).any():
            raise InvalidArgumentError("triangle with repeated vertex")
        if t.size and (self.signed_areas() <= 0).any():
            k = int(np.argmin(self.signed_areas()))
            raise InvalidArgumentError(
                f"triangle {k} has non-positive area {self.signed_areas()[k]:g}")

    # -- cached geometry ---------------------------------------------------

    def _cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def signed_areas(self):
        def build():
            p = self.points[self.tri]
            a = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                       - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
            return a
        if not hasattr(self, "_cache"):  # during validation
            p = self.points[self.tri]
            return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                          - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
        return self._cached("areas", build)

    def total_area(self) -> float:
        return float(self.signed_areas().sum())

    def barycenters(self):
        return self._cached("bary", lambda: self.points[self.tri].mean(axis=1))

    def basis_gradients(self):
        """Gradients of the three barycentric coordinates per triangle.

        Returns (gx, gy), each of shape (nt, 3).
        """
        def build():
            p = self.points[self.tri]
            x, y = p[:, :, 0], p[:, :, 1]
            a2 = 2.0 * self.signed_areas()
            gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
            gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
            return gx / a2[:, None], gy / a2[:, None]
        return self._cached("grads", build)

    def edge_lengths(self):
        def build():
            d = self.points[self.edge[:, 1]] - self.points[self.edge[:, 0]]
            return np.hypot(d[:, 0], d[:, 1])
        return self._cached("edge_len", build)

    def bbox(self):
        return (self.points.min(axis=0), self.points.max(axis=0))

    def diameter(self) -> float:
        lo, hi = self.bbox()
        return float(np.hypot(*(hi - lo)))

    def neighbors(self):
        """Triangle adjacency: neighbors()[t, k] faces edge (v[k], v[k+1]), -1 on the hull."""
        def build():
            nbr = np.full((self.nt, 3), -1, dtype=np.int64)
            owner = {}
            for t in range(self.nt):
                vs = self.tri[t]
                for k in range(3):
                    a, b = int(vs[k]), int(vs[(k + 1) % 3])
                    key = (min(a, b), max(a, b))
                    if key in owner:
                        t2, k2 = owner.pop(key)
                        nbr[t, k] = t2
                        nbr[t2, k2] = t
                    else:
                        owner[key] = (t, k)
            return nbr
        return self._cached("neighbors", build)

    def edge_triangle(self):
        """For each labeled edge, the indices of incident triangles (nt_inc, first)."""
        def build():
            owner = {}
            for t in range(self.nt):
                vs = self.tri[t]
                for k in range(3):
                    a, b = int(vs[k]), int(vs[(k + 1) % 3])
                    owner.setdefault((min(a, b), max(a, b)), []).append(t)
            tri_of = np.full(self.ne, -1, dtype=np.int64)
            count = np.zeros(self.ne, dtype=np.int64)
            for e in range(self.ne):
                a, b = int(self.edge[e, 0]), int(self.edge[e, 1])
                inc = owner.get((min(a, b), max(a, b)), [])
                count[e] = len(inc)
                tri_of[e] = inc[0] if inc else -1
            return tri_of, count
        return self._cached("edge_tri", build)

    def boundary_labels(self):
        return sorted(int(v) for v in np.unique(self.edge_label))

    def vertices_on_labels(self, labels):
        """Vertices incident to a labeled edge with label in `labels` (sorted)."""
        labels = set(int(v) for v in labels)
        mask = np.isin(self.edge_label, list(labels))
        return np.unique(self.edge[mask])


def build_square(m: int, n: int, transform=None) -> Mesh:
    """Structured mesh of the unit square: m x n cells, each split along the
    (i,j)-(i+1,j+1) diagonal.  Boundary labels: 1 bottom, 2 right, 3 top, 4 left.

    `transform`, if given, maps (x, y) arrays to transformed coordinate arrays.
    """
    if m < 1 or n < 1:
        raise InvalidArgumentError(f"square needs m, n >= 1, got {m}, {n}")
    xs = np.linspace(0.0, 1.0, m + 1)
    ys = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    px = X.ravel()
    py = Y.ravel()

    def vid(i, j):
        return j * (m + 1) + i

    tris = np.empty((2 * m * n, 3), dtype=np.int64)
    k = 0
    for j in range(n):
        for i in range(m):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            tris[k] = (a, b, c)
            tris[k + 1] = (a, c, d)
            k += 2

    edges = []
    labels = []
    for i in range(m):                      # bottom, label 1, left to right
        edges.append((vid(i, 0), vid(i + 1, 0)))
        labels.append(1)
    for j in range(n):                      # right, label 2, upward
        edges.append((vid(m, j), vid(m, j + 1)))
        labels.append(2)
    for i in range(m, 0, -1):               # top, label 3, right to left
        edges.append((vid(i, n), vid(i - 1, n)))
        labels.append(3)
    for j in range(n, 0, -1):               # left, label 4, downward
        edges.append((vid(0, j), vid(0, j - 1)))
        labels.append(4)
    edges = np.array(edges, dtype=np.int64)
    labels = np.array(labels, dtype=np.int64)

    vlab = np.zeros(len(px), dtype=np.int64)
    for (a, b), lab in zip(edges[::-1], labels[::-1]):  # first edge wins
        vlab[a] = lab
        vlab[b] = lab

    if transform is not None:
        px, py = _apply_transform(transform, px, py)
    points = np.column_stack([px, py])
    return Mesh(points, tris, edges, vertex_labels=vlab, edge_labels=labels)


def _apply_transform(transform, px, py):
    out = transform(px, py)
    qx, qy = out
    qx = np.broadcast_to(np.asarray(qx, dtype=float), px.shape).copy()
    qy = np.broadcast_to(np.asarray(qy, dtype=float), py.shape).copy()
    return qx, qy


def move_mesh(mesh: Mesh, transform) -> Mesh:
    """Apply a coordinate transform, keeping connectivity and labels.

    Raises FoldOverError if any transformed triangle degenerates or flips.
    """
    px, py = _apply_transform(transform, mesh.points[:, 0], mesh.points[:, 1])
    points = np.column_stack([px, py])
    p = points[mesh.tri]
    areas = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                   - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    if (areas <= 0).any():
        k = int(np.argmin(areas))
        raise FoldOverError(f"transform folds triangle {k} (area {areas[k]:g})")
    return Mesh(points, mesh.tri, mesh.edge, vertex_labels=mesh.vertex_label,
                regions=mesh.region, edge_labels=mesh.edge_label)
