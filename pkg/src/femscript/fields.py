"""Scalar fields over a mesh: the coefficient language of integrands.

A Field can be evaluated in bulk at quadrature points of many triangles
(`eval_cells`) or at raw coordinates (`eval_points`).  Arithmetic on fields
builds expression trees, so integrands like `(uh - uex)**2` or
`4*sin(x**2 + y**2 - 1)*x**2` evaluate vectorized during assembly.
"""

import numpy as np

from .errors import InvalidArgumentError
from .fespace import FeFunction, evaluate as point_eval


class CellContext:
    """Evaluation sites: triangles `tri`, coordinates (x, y) of shape
    (n, nq), and barycentric coordinates `lam` of shape (nq, 3) shared by
    all triangles, or (n, nq, 3) when they differ per entity (edges)."""

    def __init__(self, mesh, tri, x, y, lam):
        self.mesh = mesh
        self.tri = tri
        self.x = x
        self.y = y
        self.lam = lam


class Field:
    def eval_cells(self, ctx):
        raise NotImplementedError

    def eval_points(self, x, y):
        raise NotImplementedError

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        return Binary(np.add, self, as_field(other))

    def __radd__(self, other):
        return Binary(np.add, as_field(other), self)

    def __sub__(self, other):
        return Binary(np.subtract, self, as_field(other))

    def __rsub__(self, other):
        return Binary(np.subtract, as_field(other), self)

    def __mul__(self, other):
        return Binary(np.multiply, self, as_field(other))

    def __rmul__(self, other):
        return Binary(np.multiply, as_field(other), self)

    def __truediv__(self, other):
        return Binary(np.divide, self, as_field(other))

    def __rtruediv__(self, other):
        return Binary(np.divide, as_field(other), self)

    def __pow__(self, other):
        return Binary(np.power, self, as_field(other))

    def __neg__(self):
        return Unary(np.negative, self)

    def __abs__(self):
        return Unary(np.abs, self)

    # comparisons produce 0/1 indicator fields (used by cutoff coefficients)

    def _cmp(self, op, other, swap=False):
        a, b = (as_field(other), self) if swap else (self, as_field(other))
        return Binary(lambda u, v: op(u, v).astype(float), a, b)

    def __lt__(self, other):
        return self._cmp(np.less, other)

    def __le__(self, other):
        return self._cmp(np.less_equal, other)

    def __gt__(self, other):
        return self._cmp(np.greater, other)

    def __ge__(self, other):
        return self._cmp(np.greater_equal, other)


class Constant(Field):
    def __init__(self, value):
        self.value = float(value)

    def eval_cells(self, ctx):
        return self.value

    def eval_points(self, x, y):
        return np.full(np.shape(x), self.value)


class Coordinate(Field):
    def __init__(self, axis):
        self.axis = axis  # 0 for x, 1 for y

    def eval_cells(self, ctx):
        return ctx.x if self.axis == 0 else ctx.y

    def eval_points(self, x, y):
        return np.asarray(x if self.axis == 0 else y, dtype=float)


class FunctionField(Field):
    """Wraps a vectorized callable f(x, y)."""

    def __init__(self, fn):
        self.fn = fn

    def eval_cells(self, ctx):
        return np.asarray(self.fn(ctx.x, ctx.y), dtype=float)

    def eval_points(self, x, y):
        return np.asarray(self.fn(np.asarray(x, dtype=float),
                                  np.asarray(y, dtype=float)), dtype=float)


class FeField(Field):
    """An FE function seen as a field (values via local interpolation)."""

    def __init__(self, u: FeFunction):
        self.u = u

    def eval_cells(self, ctx):
        u = self.u
        if u.space.mesh is not ctx.mesh:
            raise InvalidArgumentError("FE coefficient lives on a different mesh")
        if u.space.elem == "P0":
            vals = u.dofs[ctx.tri]                      # (n,)
            return np.broadcast_to(vals[:, None], ctx.x.shape)
        nodal = u.dofs[ctx.mesh.tri[ctx.tri]]           # (n, 3)
        if ctx.lam.ndim == 2:
            return nodal @ ctx.lam.T                    # (n, nq)
        return np.einsum("nk,nqk->nq", nodal, ctx.lam)

    def eval_points(self, x, y):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.array([point_eval(self.u, xi, yi) for xi, yi in zip(xs.ravel(), ys.ravel())])
        return out.reshape(np.shape(x)) if np.shape(x) else float(out[0])


class FeGradField(Field):
    """Partial derivative of a P1 FE function: piecewise constant."""

    def __init__(self, u: FeFunction, axis):
        self.u = u
        self.axis = axis

    def eval_cells(self, ctx):
        u = self.u
        if u.space.mesh is not ctx.mesh:
            raise InvalidArgumentError("FE coefficient lives on a different mesh")
        if u.space.elem == "P0":
            return np.zeros(ctx.x.shape)
        gx, gy = ctx.mesh.basis_gradients()
        g = gx if self.axis == 0 else gy
        nodal = u.dofs[ctx.mesh.tri[ctx.tri]]
        vals = np.einsum("nk,nk->n", nodal, g[ctx.tri])
        return np.broadcast_to(vals[:, None], ctx.x.shape)

    def eval_points(self, x, y):
        raise InvalidArgumentError("gradients of FE functions are integrand-only")


class Binary(Field):
    def __init__(self, op, a, b):
        self.op = op
        self.a = a
        self.b = b

    def eval_cells(self, ctx):
        return self.op(self.a.eval_cells(ctx), self.b.eval_cells(ctx))

    def eval_points(self, x, y):
        return self.op(self.a.eval_points(x, y), self.b.eval_points(x, y))


class Unary(Field):
    def __init__(self, op, a):
        self.op = op
        self.a = a

    def eval_cells(self, ctx):
        return self.op(self.a.eval_cells(ctx))

    def eval_points(self, x, y):
        return self.op(self.a.eval_points(x, y))


X = Coordinate(0)
Y = Coordinate(1)


def as_field(obj) -> Field:
    if isinstance(obj, Field):
        return obj
    if isinstance(obj, FeFunction):
        return FeField(obj)
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return Constant(obj)
    if callable(obj):
        return FunctionField(obj)
    raise InvalidArgumentError(f"cannot use {type(obj).__name__} as a coefficient field")
