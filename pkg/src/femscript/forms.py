"""Variational forms: quadrature, symbolic integrands, sparse assembly.

A FormExpr is a sum of products `coef * (trial part) * (test part)` where the
trial/test parts are one of {value, d/dx, d/dy} and `coef` is a Field.  Terms
degree-1 in both trial and test assemble to a matrix, terms degree-1 in the
test function alone to a vector; mixing orders inside one integral is an
error.  Dirichlet conditions use the giant-diagonal penalty: the matrix
diagonal of every constrained DOF is overwritten with `tgv` and the right
hand side entry with `tgv` times the interpolated boundary value.

Assembly accumulates contributions in ascending triangle order and sums
duplicates with a stable sort, so results are bit-identical across runs.
"""

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, NumericError
from .fespace import FeFunction, FeSpace
from .fields import CellContext, Constant, Field, FeField, FeGradField, as_field
from .linalg import SparseMatrix

DEFAULT_TGV = 1e30

_SQ15 = np.sqrt(15.0)


@dataclass(frozen=True)
class QuadRule:
    name: str
    lam: np.ndarray   # (nq, 3) barycentric points
    w: np.ndarray     # (nq,) weights summing to 1 (scaled by area at use)


def _order5_rule() -> QuadRule:
    # 7-point degree-5 rule: centroid plus two symmetric orbits
    a1 = (6.0 - _SQ15) / 21.0
    a2 = (6.0 + _SQ15) / 21.0
    w1 = (155.0 - _SQ15) / 1200.0
    w2 = (155.0 + _SQ15) / 1200.0
    pts = [np.array([1 / 3, 1 / 3, 1 / 3])]
    wts = [9.0 / 40.0]
    for a, w in ((a1, w1), (a2, w2)):
        for k in range(3):
            row = np.array([a, a, a])
            row[k] = 1.0 - 2.0 * a
            pts.append(row)
            wts.append(w)
    return QuadRule("order5", np.array(pts), np.array(wts))


RULES_2D = {
    # 3 edge midpoints: exact for quadratics
    "default": QuadRule("default",
                        np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
                        np.array([1 / 3, 1 / 3, 1 / 3])),
    # 3 vertices: exact for linears, diagonalizes the mass matrix
    "lumped": QuadRule("lumped",
                       np.eye(3),
                       np.array([1 / 3, 1 / 3, 1 / 3])),
    "order5": _order5_rule(),
}

# 2-point Gauss on an edge: exact for cubics along the edge
_g = 0.5 / np.sqrt(3.0)
EDGE_RULE = (np.array([0.5 - _g, 0.5 + _g]), np.array([0.5, 0.5]))


def _rule(quad) -> QuadRule:
    if isinstance(quad, QuadRule):
        return quad
    try:
        return RULES_2D[quad]
    except KeyError:
        raise InvalidArgumentError(f"unknown quadrature rule {quad!r}")


# --------------------------------------------------------------------------
# symbolic trial/test layer

class TrialFunction:
    """Placeholder for the unknown in a bilinear integrand."""


class TestFunction:
    """Placeholder for the test function in an integrand."""


def _atom(uk=None, vk=None):
    return FormExpr({(uk, vk): Constant(1.0)})


def _combine(k1, k2, what):
    if k1 is None:
        return k2
    if k2 is None:
        return k1
    raise InvalidArgumentError(f"integrand is nonlinear in the {what} function")


class FormExpr:
    """Multilinear polynomial in the trial/test atoms with Field coefficients."""

    _form_expr_marker = True

    def __init__(self, terms):
        self.terms = dict(terms)

    # degrees -------------------------------------------------------------

    def has_trial(self):
        return any(uk is not None for uk, _ in self.terms)

    def has_test(self):
        return any(vk is not None for _, vk in self.terms)

    def is_pure(self):
        return not self.has_trial() and not self.has_test()

    def pure_field(self) -> Field:
        if not self.is_pure():
            raise InvalidArgumentError("expression still contains trial/test functions")
        out = None
        for f in self.terms.values():
            out = f if out is None else out + f
        return Constant(0.0) if out is None else out

    # arithmetic ------------------------------------------------------------

    @staticmethod
    def _wrap(other):
        if isinstance(other, FormExpr):
            return other
        if isinstance(other, (TrialFunction, TestFunction)):
            return as_form(other)
        return FormExpr({(None, None): as_field(other)})

    def _merge(self, other, sign):
        out = dict(self.terms)
        for k, f in other.terms.items():
            g = f if sign > 0 else -f
            out[k] = out[k] + g if k in out else g
        return FormExpr(out)

    def __add__(self, other):
        return self._merge(self._wrap(other), +1)

    def __radd__(self, other):
        return self._wrap(other)._merge(self, +1)

    def __sub__(self, other):
        return self._merge(self._wrap(other), -1)

    def __rsub__(self, other):
        return self._wrap(other)._merge(self, -1)

    def __neg__(self):
        return FormExpr({k: -f for k, f in self.terms.items()})

    def __mul__(self, other):
        other = self._wrap(other)
        out = {}
        for (u1, v1), f1 in self.terms.items():
            for (u2, v2), f2 in other.terms.items():
                key = (_combine(u1, u2, "trial"), _combine(v1, v2, "test"))
                prod = f1 * f2
                out[key] = out[key] + prod if key in out else prod
        return FormExpr(out)

    def __rmul__(self, other):
        return self._wrap(other).__mul__(self)

    def __truediv__(self, other):
        other = self._wrap(other)
        div = other.pure_field()
        return FormExpr({k: f / div for k, f in self.terms.items()})

    def __pow__(self, n):
        if self.is_pure():
            return FormExpr({(None, None): self.pure_field() ** as_field(n)})
        n = int(n)
        if n == 1:
            return self
        if n == 2:
            return self * self
        raise InvalidArgumentError("cannot raise a trial/test expression to that power")


def as_form(obj) -> FormExpr:
    if isinstance(obj, FormExpr):
        return obj
    if isinstance(obj, TrialFunction):
        return _atom(uk="val")
    if isinstance(obj, TestFunction):
        return _atom(vk="val")
    return FormExpr({(None, None): as_field(obj)})


def dx(obj):
    """d/dx of a trial/test placeholder or of an FE function."""
    return _diff(obj, 0)


def dy(obj):
    """d/dy of a trial/test placeholder or of an FE function."""
    return _diff(obj, 1)


def _diff(obj, axis):
    kind = "dx" if axis == 0 else "dy"
    if isinstance(obj, TrialFunction):
        return _atom(uk=kind)
    if isinstance(obj, TestFunction):
        return _atom(vk=kind)
    if isinstance(obj, FeFunction):
        return FeGradField(obj, axis)
    if isinstance(obj, FeField):
        return FeGradField(obj.u, axis)
    raise InvalidArgumentError(
        f"d/d{'xy'[axis]} applies to trial/test placeholders or FE functions")


# --------------------------------------------------------------------------
# form containers

@dataclass(frozen=True)
class FormTerm:
    kind: str                      # "int2d" | "int1d"
    expr: FormExpr
    labels: Optional[frozenset] = None   # int1d only
    quad: str = "default"

    def __post_init__(self):
        if self.kind not in ("int2d", "int1d"):
            raise InvalidArgumentError(f"unknown term kind {self.kind!r}")
        if self.kind == "int1d" and not self.labels:
            raise InvalidArgumentError("boundary integral needs a non-empty label set")


@dataclass(frozen=True)
class DirichletBC:
    labels: frozenset
    value: Field


@dataclass
class VarForm:
    bilinear_terms: list = dc_field(default_factory=list)
    linear_terms: list = dc_field(default_factory=list)
    dirichlet: list = dc_field(default_factory=list)

    def __post_init__(self):
        if not (self.bilinear_terms or self.linear_terms or self.dirichlet):
            raise InvalidArgumentError("variational form has no terms")
        for t in self.bilinear_terms:
            for uk, vk in t.expr.terms:
                if uk is None or vk is None:
                    raise InvalidArgumentError(
                        "bilinear integral mixes in a non-bilinear part")
        for t in self.linear_terms:
            for uk, vk in t.expr.terms:
                if uk is not None or vk is None:
                    raise InvalidArgumentError(
                        "linear integral must be degree one in the test function alone")


# --------------------------------------------------------------------------
# numeric integration

def _cell_context(mesh, rule):
    tri = np.arange(mesh.nt)
    p = mesh.points[mesh.tri]
    x = np.einsum("qk,nk->nq", rule.lam, p[:, :, 0])
    y = np.einsum("qk,nk->nq", rule.lam, p[:, :, 1])
    return CellContext(mesh, tri, x, y, rule.lam)


def integrate_2d(mesh, g, quad="default") -> float:
    """Integral of a scalar field over the whole mesh."""
    rule = _rule(quad)
    ctx = _cell_context(mesh, rule)
    if isinstance(g, FormExpr):
        g = g.pure_field()
    vals = np.broadcast_to(np.asarray(as_field(g).eval_cells(ctx), dtype=float),
                           ctx.x.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericError("integrand is not finite on the domain")
    area = mesh.signed_areas()
    # pairwise np.sum keeps the roundoff of large meshes near machine epsilon
    return float(np.sum(area * (vals @ rule.w)))


def _edge_context(mesh, sel):
    """Context for edge quadrature points of the selected labeled edges."""
    s, _ = EDGE_RULE
    tri_of, _ = mesh.edge_triangle()
    tri = tri_of[sel]
    if (tri < 0).any():
        raise InvalidArgumentError("labeled edge not attached to any triangle")
    a = mesh.edge[sel, 0]
    b = mesh.edge[sel, 1]
    pa = mesh.points[a]
    pb = mesh.points[b]
    x = pa[:, None, 0] * (1 - s)[None, :] + pb[:, None, 0] * s[None, :]
    y = pa[:, None, 1] * (1 - s)[None, :] + pb[:, None, 1] * s[None, :]
    lam = np.zeros((len(sel), len(s), 3))
    tv = mesh.tri[tri]
    for k in range(3):
        lam[:, :, k] = np.where((tv[:, k] == a)[:, None], (1 - s)[None, :],
                                np.where((tv[:, k] == b)[:, None], s[None, :], 0.0))
    ctx = CellContext(mesh, tri, x, y, lam)
    length = np.hypot(pb[:, 0] - pa[:, 0], pb[:, 1] - pa[:, 1])
    return ctx, length


def _select_edges(mesh, labels):
    labels = frozenset(int(v) for v in labels)
    if not labels:
        raise InvalidArgumentError("empty boundary label set")
    have = set(mesh.boundary_labels())
    missing = labels - have
    if missing:
        raise InvalidArgumentError(f"labels {sorted(missing)} not present on the boundary")
    return np.where(np.isin(mesh.edge_label, list(labels)))[0]


def integrate_1d(mesh, labels, g) -> float:
    """Integral of a scalar field over the boundary edges with given labels."""
    sel = _select_edges(mesh, labels)
    ctx, length = _edge_context(mesh, sel)
    if isinstance(g, FormExpr):
        g = g.pure_field()
    vals = np.broadcast_to(np.asarray(as_field(g).eval_cells(ctx), dtype=float),
                           ctx.x.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericError("integrand is not finite on the boundary")
    _, w = EDGE_RULE
    return float(np.sum(length * (vals @ w)))


# --------------------------------------------------------------------------
# assembly

def _cell_basis(space, kind, ctx, nq):
    """Basis table of shape (n, nq, nloc) and the DOF map (n, nloc)."""
    mesh = ctx.mesh
    n = len(ctx.tri)
    if space.elem == "P0":
        dofs = ctx.tri[:, None]
        if kind == "val":
            return np.ones((n, nq, 1)), dofs
        return np.zeros((n, nq, 1)), dofs
    dofs = mesh.tri[ctx.tri]
    if kind == "val":
        if ctx.lam.ndim == 2:
            B = np.broadcast_to(ctx.lam[None, :, :], (n, nq, 3))
        else:
            B = ctx.lam
        return B, dofs
    gx, gy = mesh.basis_gradients()
    g = gx if kind == "dx" else gy
    return np.broadcast_to(g[ctx.tri][:, None, :], (n, nq, 3)), dofs


def _coef_values(f, ctx):
    vals = np.asarray(f.eval_cells(ctx), dtype=float)
    vals = np.broadcast_to(vals, ctx.x.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericError("form coefficient is not finite")
    return vals


def dirichlet_dofs(space: FeSpace, labels):
    """DOF indices pinned by a Dirichlet clause on the given labels."""
    if space.elem != "P1":
        raise InvalidArgumentError("Dirichlet clauses need vertex DOFs (P1)")
    _select_edges(space.mesh, labels)  # validates presence
    return space.mesh.vertices_on_labels(labels)


def assemble_bilinear(form: VarForm, trial: FeSpace, test: FeSpace,
                      tgv: float = DEFAULT_TGV) -> SparseMatrix:
    """Assemble the matrix of all bilinear terms, then pin Dirichlet rows."""
    if trial.mesh is not test.mesh:
        raise InvalidArgumentError("trial and test spaces live on different meshes")
    mesh = trial.mesh
    rows_acc, cols_acc, vals_acc = [], [], []
    for term in form.bilinear_terms:
        if term.kind == "int2d":
            rule = _rule(term.quad)
            ctx = _cell_context(mesh, rule)
            scale = mesh.signed_areas()[:, None] * rule.w[None, :]
            nq = len(rule.w)
        else:
            sel = _select_edges(mesh, term.labels)
            ctx, length = _edge_context(mesh, sel)
            _, w = EDGE_RULE
            scale = length[:, None] * w[None, :]
            nq = len(w)
        for (uk, vk), f in term.expr.terms.items():
            C = _coef_values(f, ctx) * scale
            Bu, dof_u = _cell_basis(trial, uk, ctx, nq)
            Bv, dof_v = _cell_basis(test, vk, ctx, nq)
            loc = np.einsum("nq,nqi,nqj->nij", C, Bv, Bu)
            ni, nj = loc.shape[1], loc.shape[2]
            rows_acc.append(np.repeat(dof_v, nj, axis=1).ravel())
            cols_acc.append(np.tile(dof_u, (1, ni)).ravel())
            vals_acc.append(loc.ravel())
    if rows_acc:
        rows = np.concatenate(rows_acc)
        cols = np.concatenate(cols_acc)
        vals = np.concatenate(vals_acc)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    A = SparseMatrix.from_coo(rows, cols, vals, (test.ndof, trial.ndof))
    pinned = _dirichlet_union(form, trial)
    if len(pinned):
        A = A.with_diagonal(pinned, tgv)
    return A


def _dirichlet_union(form, space):
    if not form.dirichlet:
        return np.zeros(0, dtype=np.int64)
    out = [dirichlet_dofs(space, bc.labels) for bc in form.dirichlet]
    return np.unique(np.concatenate(out))


def assemble_linear(form: VarForm, test: FeSpace, tgv: float = DEFAULT_TGV) -> np.ndarray:
    """Assemble the vector of all linear terms, then pin Dirichlet entries to
    tgv times the interpolated boundary value."""
    mesh = test.mesh
    b = np.zeros(test.ndof)
    for term in form.linear_terms:
        if term.kind == "int2d":
            rule = _rule(term.quad)
            ctx = _cell_context(mesh, rule)
            scale = mesh.signed_areas()[:, None] * rule.w[None, :]
            nq = len(rule.w)
        else:
            sel = _select_edges(mesh, term.labels)
            ctx, length = _edge_context(mesh, sel)
            _, w = EDGE_RULE
            scale = length[:, None] * w[None, :]
            nq = len(w)
        for (_, vk), f in term.expr.terms.items():
            C = _coef_values(f, ctx) * scale
            Bv, dof_v = _cell_basis(test, vk, ctx, nq)
            contrib = np.einsum("nq,nqi->ni", C, Bv)
            np.add.at(b, dof_v.ravel(), contrib.ravel())
    for bc in form.dirichlet:
        dofs = dirichlet_dofs(test, bc.labels)
        pts = mesh.points[dofs]
        if isinstance(bc.value, FeField) and bc.value.u.space.elem == "P1" \
                and bc.value.u.space.mesh is mesh:
            gvals = bc.value.u.dofs[dofs]
        else:
            gvals = np.broadcast_to(
                np.asarray(bc.value.eval_points(pts[:, 0], pts[:, 1]), dtype=float),
                (len(dofs),))
        b[dofs] = gvals * tgv
    return b
