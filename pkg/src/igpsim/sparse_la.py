"""Compressed sparse row matrices and the two Krylov solvers used here.

The matrix type is deliberately small: construction from COO triplets
(duplicates summed in a fixed order, so assembly is reproducible),
matvec, and diagonal extraction. Solvers are conjugate gradients with
plain Jacobi preconditioning for the SPD systems and BiCGStab for
nonsymmetric ones. Both report iterations, the final relative residual
and a converged flag instead of raising on breakdown.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import cg_jacobi as _cg_backend
from ._kernels import csr_matvec as _matvec_backend
from ._kernels import pycore as _py

__all__ = ["SparseMatrix", "SolverReport", "from_coo", "solve_cg", "solve_bicgstab"]


@dataclass(frozen=True)
class SolverReport:
    iterations: int
    final_residual: float
    converged: bool


@dataclass(frozen=True)
class SparseMatrix:
    """CSR matrix with int64 index arrays and column indices sorted per row."""

    n_rows: int
    n_cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    _diag: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_cols,):
            raise ValueError(f"matvec shape mismatch: {x.shape} vs n_cols={self.n_cols}")
        return _matvec_backend(self.indptr, self.indices, self.data, x)

    def __matmul__(self, x):
        return self.matvec(x)

    def diagonal(self) -> np.ndarray:
        """Main diagonal (zeros where the pattern has no entry); cached."""
        if "d" not in self._diag:
            n = min(self.n_rows, self.n_cols)
            d = np.zeros(n)
            for i in range(n):
                lo, hi = self.indptr[i], self.indptr[i + 1]
                k = np.searchsorted(self.indices[lo:hi], i)
                if k < hi - lo and self.indices[lo + k] == i:
                    d[i] = self.data[lo + k]
            self._diag["d"] = d
        return self._diag["d"]

    def diagonal_positions(self) -> np.ndarray:
        """Index into data of each row's diagonal entry (-1 if absent); cached."""
        if "pos" not in self._diag:
            n = min(self.n_rows, self.n_cols)
            pos = np.full(n, -1, dtype=np.int64)
            for i in range(n):
                lo, hi = self.indptr[i], self.indptr[i + 1]
                k = np.searchsorted(self.indices[lo:hi], i)
                if k < hi - lo and self.indices[lo + k] == i:
                    pos[i] = lo + k
            self._diag["pos"] = pos
        return self._diag["pos"]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        for i in range(self.n_rows):
            for k in range(self.indptr[i], self.indptr[i + 1]):
                out[i, self.indices[k]] += self.data[k]
        return out

    def with_data(self, data: np.ndarray) -> "SparseMatrix":
        """Same pattern, new values (used for shifted operators)."""
        if data.shape != self.data.shape:
            raise ValueError("data length does not match pattern")
        return SparseMatrix(self.n_rows, self.n_cols, self.indptr, self.indices, data)


def from_coo(n_rows: int, n_cols: int, rows, cols, vals) -> SparseMatrix:
    """Build CSR from triplets; duplicate entries are summed.

    Entries are ordered by (row, col) with a stable sort, so duplicate
    contributions are summed in their original relative order and the
    result is reproducible. Explicit zeros are kept: the stored pattern
    is exactly the set of touched positions.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if not (rows.shape == cols.shape == vals.shape):
        raise ValueError("rows, cols, vals must have equal length")
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
        raise ValueError("row index out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
        raise ValueError("column index out of range")

    if rows.size == 0:
        indptr = np.zeros(n_rows + 1, dtype=np.int64)
        return SparseMatrix(n_rows, n_cols, indptr, np.zeros(0, np.int64), np.zeros(0))

    order = np.lexsort((cols, rows))
    r = rows[order]
    c = cols[order]
    v = vals[order]
    first = np.empty(r.size, dtype=bool)
    first[0] = True
    first[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    starts = np.flatnonzero(first)
    out_vals = np.add.reduceat(v, starts)
    out_rows = r[starts]
    out_cols = c[starts]
    counts = np.bincount(out_rows, minlength=n_rows)
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return SparseMatrix(
        n_rows, n_cols, indptr, out_cols.astype(np.int64), out_vals.astype(np.float64)
    )


def _check_system(a: SparseMatrix, b: np.ndarray, x0) -> tuple[np.ndarray, np.ndarray]:
    if a.n_rows != a.n_cols:
        raise ValueError(f"solver needs a square matrix, got {a.n_rows}x{a.n_cols}")
    b = np.asarray(b, dtype=float)
    if b.shape != (a.n_rows,):
        raise ValueError(f"right-hand side shape {b.shape} does not match n={a.n_rows}")
    if x0 is None:
        x0 = np.zeros(a.n_rows)
    else:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (a.n_rows,):
            raise ValueError("x0 shape does not match the system")
    return b, x0


def solve_cg(
    a: SparseMatrix,
    b,
    *,
    tol: float = 1e-10,
    max_iter: int | None = None,
    x0=None,
    callback=None,
) -> tuple[np.ndarray, SolverReport]:
    """Jacobi-preconditioned CG for SPD systems.

    Residuals are measured relative to ||b||; b = 0 returns x = 0 after
    zero iterations. ``callback(k, x)`` is invoked after every update
    (this path always runs the numpy kernels).
    """
    b, x0 = _check_system(a, b, x0)
    n = a.n_rows
    if max_iter is None:
        max_iter = 10 * n
    diag = a.diagonal()
    if callback is None:
        x, iters, rel, flag = _cg_backend(
            a.indptr, a.indices, a.data, diag, b, x0, tol, max_iter
        )
    else:
        x, iters, rel, flag = _py.cg_jacobi(
            a.indptr, a.indices, a.data, diag, b, x0, tol, max_iter, callback=callback
        )
    return x, SolverReport(int(iters), float(rel), flag == 0)


def solve_bicgstab(
    a: SparseMatrix,
    b,
    *,
    tol: float = 1e-10,
    max_iter: int | None = None,
    x0=None,
) -> tuple[np.ndarray, SolverReport]:
    """Jacobi-preconditioned BiCGStab for general square systems.

    Same reporting conventions as solve_cg. Breakdown (vanishing inner
    products or non-finite values) is reported, never raised.
    """
    b, x = _check_system(a, b, x0)
    n = a.n_rows
    if max_iter is None:
        max_iter = 10 * n
    x = x.copy()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolverReport(0, 0.0, True)

    diag = a.diagonal()
    invd = 1.0 / np.where(diag != 0.0, diag, 1.0)
    tiny = np.finfo(float).tiny

    def true_rel(xv):
        return float(np.linalg.norm(b - a.matvec(xv))) / bnorm

    r = b - a.matvec(x)
    rel = float(np.linalg.norm(r)) / bnorm
    if rel <= tol:
        return x, SolverReport(0, rel, True)

    rhat = r.copy()
    rho_old = alpha = omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    iters = 0
    converged = False
    while iters < max_iter:
        rho = float(rhat @ r)
        if abs(rho) < tiny or not np.isfinite(rho):
            break
        beta = (rho / rho_old) * (alpha / omega)
        p = r + beta * (p - omega * v)
        phat = invd * p
        v = a.matvec(phat)
        rv = float(rhat @ v)
        if abs(rv) < tiny or not np.isfinite(rv):
            break
        alpha = rho / rv
        s = r - alpha * v
        iters += 1
        if float(np.linalg.norm(s)) / bnorm <= tol:
            x = x + alpha * phat
            rel = true_rel(x)
            if rel <= tol:
                converged = True
                break
            r = b - a.matvec(x)
            rhat = r.copy()
            rho_old = alpha = omega = 1.0
            v[:] = 0.0
            p[:] = 0.0
            continue
        shat = invd * s
        t = a.matvec(shat)
        tt = float(t @ t)
        if tt < tiny or not np.isfinite(tt):
            break
        omega = float(t @ s) / tt
        if abs(omega) < tiny:
            break
        x = x + alpha * phat + omega * shat
        r = s - omega * t
        rel = float(np.linalg.norm(r)) / bnorm
        if rel <= tol:
            rel = true_rel(x)
            if rel <= tol:
                converged = True
                break
            r = b - a.matvec(x)
            rhat = r.copy()
            rho_old = alpha = omega = 1.0
            v[:] = 0.0
            p[:] = 0.0
            continue
        rho_old = rho
    if not np.all(np.isfinite(x)):
        x = np.where(np.isfinite(x), x, 0.0)
        converged = False
        rel = true_rel(x)
    if not converged:
        rel = true_rel(x)
        converged = rel <= tol
    return x, SolverReport(iters, rel, converged)
