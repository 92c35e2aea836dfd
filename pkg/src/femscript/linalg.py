"""Sparse CSR matrices, direct and conjugate-gradient solvers, dense helpers.

The direct solver wraps SuperLU (fill-reducing column permutation plus
partial pivoting); the factorization is cached on the matrix and reused by
repeated solves.  The conjugate gradient is written here, Jacobi
preconditioned, and serves as the independent cross-check of the direct
route on symmetric positive definite systems.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as _sp
import scipy.sparse.linalg as _spla

from .errors import InvalidArgumentError, SingularMatrixError, SolverError, UnsupportedError


class SparseMatrix:
    """Real CSR matrix; immutable once constructed.

    Column indices are strictly increasing within each row and duplicates
    are summed away at construction.
    """

    def __init__(self, indptr, indices, data, shape, validate=True):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data)
        self.shape = (int(shape[0]), int(shape[1]))
        if validate:
            self._validate()
        for arr in (self.indptr, self.indices, self.data):
            arr.setflags(write=False)
        self._lu = None

    def _validate(self):
        n, m = self.shape
        if len(self.indptr) != n + 1 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise InvalidArgumentError("inconsistent CSR row offsets")
        if np.diff(self.indptr).min(initial=0) < 0:
            raise InvalidArgumentError("row offsets must be monotone")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= m):
            raise InvalidArgumentError("column index out of range")
        for r in range(n):
            cols = self.indices[self.indptr[r]:self.indptr[r + 1]]
            if len(cols) > 1 and (np.diff(cols) <= 0).any():
                raise InvalidArgumentError(
                    f"row {r}: column indices not strictly increasing")

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals)
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            first = np.ones(len(rows), dtype=bool)
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.where(first)[0]
            summed = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        else:
            summed = vals
        indptr = np.zeros(shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(indptr, cols, summed, shape, validate=False)

    @classmethod
    def from_dense(cls, M):
        M = np.asarray(M)
        rows, cols = np.nonzero(M)
        return cls.from_coo(rows, cols, M[rows, cols], M.shape)

    @classmethod
    def identity(cls, n):
        r = np.arange(n)
        return cls.from_coo(r, r, np.ones(n), (n, n))

    # -- queries ----------------------------------------------------------

    @property
    def nnz(self):
        return len(self.data)

    def to_dense(self):
        M = np.zeros(self.shape, dtype=self.data.dtype)
        for r in range(self.shape[0]):
            sl = slice(self.indptr[r], self.indptr[r + 1])
            M[r, self.indices[sl]] = self.data[sl]
        return M

    def diagonal(self):
        d = np.zeros(min(self.shape), dtype=self.data.dtype)
        for r in range(len(d)):
            sl = slice(self.indptr[r], self.indptr[r + 1])
            cols = self.indices[sl]
            k = np.searchsorted(cols, r)
            if k < len(cols) and cols[k] == r:
                d[r] = self.data[sl][k]
        return d

    def row_sums(self):
        out = np.zeros(self.shape[0], dtype=self.data.dtype)
        np.add.at(out, np.repeat(np.arange(self.shape[0]), np.diff(self.indptr)), self.data)
        return out

    def transpose(self):
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        return SparseMatrix.from_coo(self.indices, rows, self.data,
                                     (self.shape[1], self.shape[0]))

    @property
    def T(self):
        return self.transpose()

    def __matmul__(self, v):
        v = np.asarray(v)
        if v.ndim != 1 or len(v) != self.shape[1]:
            raise InvalidArgumentError(
                f"matvec shape mismatch: {self.shape} @ {v.shape}")
        prod = self.data * v[self.indices]
        out = np.zeros(self.shape[0], dtype=prod.dtype)
        np.add.at(out, np.repeat(np.arange(self.shape[0]), np.diff(self.indptr)), prod)
        return out

    def __add__(self, other):
        if not isinstance(other, SparseMatrix) or other.shape != self.shape:
            raise InvalidArgumentError("can only add sparse matrices of equal shape")
        r1 = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        r2 = np.repeat(np.arange(other.shape[0]), np.diff(other.indptr))
        return SparseMatrix.from_coo(
            np.concatenate([r1, r2]),
            np.concatenate([self.indices, other.indices]),
            np.concatenate([self.data, other.data]), self.shape)

    def scale(self, alpha):
        return SparseMatrix(self.indptr, self.indices, self.data * alpha,
                            self.shape, validate=False)

    def with_diagonal(self, dof_indices, value) -> "SparseMatrix":
        """Copy with the diagonal of the given rows overwritten by `value`."""
        dof_indices = np.asarray(dof_indices, dtype=np.int64)
        data = self.data.copy()
        missing = []
        for r in dof_indices:
            sl = slice(self.indptr[r], self.indptr[r + 1])
            cols = self.indices[sl]
            k = np.searchsorted(cols, r)
            if k < len(cols) and cols[k] == r:
                data[self.indptr[r] + k] = value
            else:
                missing.append(r)
        if not missing:
            return SparseMatrix(self.indptr, self.indices, data, self.shape,
                                validate=False)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        miss = np.asarray(missing, dtype=np.int64)
        return SparseMatrix.from_coo(
            np.concatenate([rows, miss]),
            np.concatenate([self.indices, miss]),
            np.concatenate([data, np.full(len(miss), value)]), self.shape)

    def to_scipy(self):
        return _sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def __repr__(self):
        return f"SparseMatrix({self.shape[0]}x{self.shape[1]}, nnz={self.nnz})"


# --------------------------------------------------------------------------
# direct solver

class LuFactorization:
    def __init__(self, A: SparseMatrix):
        if A.shape[0] != A.shape[1]:
            raise InvalidArgumentError("LU needs a square matrix")
        try:
            self._splu = _spla.splu(A.to_scipy().tocsc())
        except RuntimeError as exc:
            raise SingularMatrixError(str(exc)) from exc
        self.shape = A.shape

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        x = self._splu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("factorization produced non-finite solution")
        return x


def factorize(A: SparseMatrix) -> LuFactorization:
    if A._lu is None:
        A._lu = LuFactorization(A)
    return A._lu


def solve_lu(A: SparseMatrix, b) -> np.ndarray:
    """Direct solve; the factorization is cached on A for reuse."""
    return factorize(A).solve(b)


# --------------------------------------------------------------------------
# conjugate gradient

@dataclass
class CgResult:
    x: np.ndarray
    converged: bool
    iterations: int
    relative_residual: float


def solve_cg(A: SparseMatrix, b, tol: float = 1e-10, maxit=None) -> CgResult:
    """Jacobi-preconditioned conjugate gradient from a zero initial guess.

    Stops when the 2-norm of the residual drops below tol * ||b||; raises
    SolverError on an indefinite breakdown (p' A p <= 0).
    """
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if maxit is None:
        maxit = 10 * n
    x = np.zeros(n)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return CgResult(x, True, 0, 0.0)
    if maxit <= 0:
        return CgResult(x, False, 0, 1.0)
    diag = A.diagonal().astype(float)
    inv_diag = np.where(np.abs(diag) > 0, 1.0 / np.where(diag == 0, 1.0, diag), 1.0)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    rel = 1.0
    for it in range(1, maxit + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverError(f"conjugate gradient breakdown: p'Ap = {pAp:g}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rel = float(np.linalg.norm(r)) / bnorm
        if rel <= tol:
            return CgResult(x, True, it, rel)
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return CgResult(x, False, maxit, rel)


# --------------------------------------------------------------------------
# dense helpers (small matrices and arrays of the scripting language)

def dot(u, v) -> float:
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise InvalidArgumentError("dot needs equal-length vectors")
    return complex(u @ np.conj(v)) if np.iscomplexobj(u) or np.iscomplexobj(v) else float(u @ v)


def outer(u, v):
    return np.outer(np.asarray(u), np.asarray(v))


def matvec(M, u):
    M = np.asarray(M)
    u = np.asarray(u)
    if M.ndim != 2 or M.shape[1] != len(u):
        raise InvalidArgumentError(f"matvec shape mismatch: {M.shape} @ {u.shape}")
    return M @ u


def transpose(M):
    return np.asarray(M).T


def elem_mul(u, v):
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape:
        raise InvalidArgumentError("elementwise product needs equal shapes")
    return u * v


def elem_div(u, v):
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape:
        raise InvalidArgumentError("elementwise division needs equal shapes")
    return u / v


def trace(M) -> float:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError("trace needs a square matrix")
    t = M.trace()
    return complex(t) if np.iscomplexobj(M) else float(t)


def det(M):
    """Determinant of a 1x1 or 2x2 matrix; larger sizes are unsupported."""
    M = np.asarray(M)
    if M.shape == (1, 1):
        return M[0, 0]
    if M.shape == (2, 2):
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    raise UnsupportedError("det is only defined for 1x1 and 2x2 matrices")
