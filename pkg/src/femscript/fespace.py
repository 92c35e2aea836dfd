"""P0/P1 finite element spaces: DOF numbering, interpolation, point evaluation.

P1 numbers one DOF per vertex (dof_of(t, k) = vertex index), P0 one DOF per
triangle at its barycenter.  Point evaluation locates the containing triangle
by walking the adjacency graph from the last hit, falling back to a brute
scan, and interpolates barycentrically.
"""

import numpy as np

from .errors import InvalidArgumentError, NumericError, OutOfDomainError
from .mesh import Mesh

_ELEMS = ("P0", "P1")


class FeSpace:
    """Finite element space of kind "P0" or "P1" over a mesh."""

    def __init__(self, mesh: Mesh, elem: str):
        if elem not in _ELEMS:
            raise InvalidArgumentError(f"unsupported element kind {elem!r}")
        self.mesh = mesh
        self.elem = elem
        self.ndof = mesh.nv if elem == "P1" else mesh.nt

    def dof_of(self, t: int, local: int) -> int:
        if self.elem == "P1":
            return int(self.mesh.tri[t, local])
        if local != 0:
            raise InvalidArgumentError("P0 has a single local DOF per triangle")
        return t

    def dof_sites(self):
        """Coordinates where DOF values live: vertices (P1) or barycenters (P0)."""
        if self.elem == "P1":
            return self.mesh.points[:, 0], self.mesh.points[:, 1]
        b = self.mesh.barycenters()
        return b[:, 0], b[:, 1]

    def function(self, values=None) -> "FeFunction":
        u = FeFunction(self)
        if values is not None:
            u.dofs[:] = values
        return u

    def __repr__(self):
        return f"FeSpace({self.elem}, ndof={self.ndof})"


def create_space(mesh: Mesh, elem: str) -> FeSpace:
    return FeSpace(mesh, elem)


class FeFunction:
    """DOF-value vector bound to a space; callable at points of the domain."""

    def __init__(self, space: FeSpace):
        self.space = space
        self.dofs = np.zeros(space.ndof)

    def copy(self) -> "FeFunction":
        v = FeFunction(self.space)
        v.dofs[:] = self.dofs
        return v

    def __call__(self, x, y):
        return evaluate(self, x, y)

    def __repr__(self):
        return f"FeFunction({self.space.elem}, ndof={self.space.ndof})"


def interpolate(space: FeSpace, f) -> FeFunction:
    """Interpolate an analytic function at the DOF sites.

    `f` may be vectorized over coordinate arrays or plain scalar->scalar.
    """
    x, y = space.dof_sites()
    try:
        vals = np.asarray(f(x, y), dtype=float)
        vals = np.broadcast_to(vals, x.shape).copy()
    except (TypeError, ValueError):
        vals = np.array([float(f(float(xi), float(yi))) for xi, yi in zip(x, y)])
    if not np.all(np.isfinite(vals)):
        k = int(np.argmin(np.isfinite(vals)))
        raise NumericError(f"interpolated function not finite at ({x[k]:g}, {y[k]:g})")
    u = FeFunction(space)
    u.dofs[:] = vals
    return u


class _Locator:
    """Point location by neighbor walking with a last-hit hint."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.hint = 0
        self.tol = 1e-12 * max(mesh.diameter(), 1e-300)

    def barycentric(self, t, x, y):
        gx, gy = self.mesh.basis_gradients()
        lam = np.empty(3)
        # lambda_k is affine with gradient (gx, gy)[t, k] and lambda_k(v_k) = 1
        for k in range(3):
            vk = self.mesh.points[self.mesh.tri[t, k]]
            lam[k] = 1.0 + gx[t, k] * (x - vk[0]) + gy[t, k] * (y - vk[1])
        return lam

    def locate(self, x, y):
        mesh = self.mesh
        nbr = mesh.neighbors()
        t = self.hint if self.hint < mesh.nt else 0
        for _ in range(mesh.nt + 8):
            lam = self.barycentric(t, x, y)
            worst = int(np.argmin(lam))
            if lam[worst] >= -self.tol:
                self.hint = t
                return t, lam
            nxt = nbr[t, (worst + 1) % 3]
            if nxt < 0:
                break
            t = nxt
        return self._brute(x, y)

    def _brute(self, x, y):
        mesh = self.mesh
        gx, gy = mesh.basis_gradients()
        p = mesh.points[mesh.tri]          # (nt, 3, 2)
        lam = 1.0 + gx * (x - p[:, :, 0]) + gy * (y - p[:, :, 1])
        ok = np.where((lam >= -self.tol).all(axis=1))[0]
        if len(ok) == 0:
            raise OutOfDomainError(f"point ({x:g}, {y:g}) is outside the mesh")
        t = int(ok[0])
        self.hint = t
        return t, lam[t]


def _locator(mesh: Mesh) -> _Locator:
    loc = mesh._cache.get("locator")
    if loc is None:
        loc = mesh._cache["locator"] = _Locator(mesh)
    return loc


def evaluate(u: FeFunction, x: float, y: float) -> float:
    """Value of the FE function at a point of the domain."""
    mesh = u.space.mesh
    t, lam = _locator(mesh).locate(float(x), float(y))
    if u.space.elem == "P0":
        return float(u.dofs[t])
    k = int(np.argmax(lam))
    if lam[k] >= 1.0 - 1e-12:  # vertex hit: exact DOF value
        return float(u.dofs[mesh.tri[t, k]])
    lam = np.clip(lam, 0.0, None)
    lam /= lam.sum()
    return float(lam @ u.dofs[mesh.tri[t]])
