"""Numpy implementations of the hot kernels.

These are the fallback twins of the compiled versions in _core.pyx and
must match them to rounding error. Summation order is fixed within each
backend (bincount and in-order loops), so repeated runs are bit-identical.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def csr_matvec(indptr, indices, data, x):
    """y = A @ x for CSR arrays. Rows may be empty."""
    n = indptr.shape[0] - 1
    prod = data * x[indices]
    counts = np.diff(indptr)
    rows = np.repeat(np.arange(n, dtype=np.int64), counts)
    return np.bincount(rows, weights=prod, minlength=n)


def _matvec_with_rows(rows, indices, data, x, n):
    return np.bincount(rows, weights=data * x[indices], minlength=n)


def cg_jacobi(indptr, indices, data, diag, b, x0, tol, max_iter, callback=None):
    """Jacobi-preconditioned conjugate gradients on a CSR matrix.

    Returns (x, iterations, relative_residual, flag) with flag 0 on
    convergence, 1 when the iteration budget is exhausted and 2 on
    breakdown (non-positive or non-finite curvature). Convergence is
    only declared after the recomputed true residual passes tol.
    """
    n = indptr.shape[0] - 1
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0, 0

    counts = np.diff(indptr)
    rows = np.repeat(np.arange(n, dtype=np.int64), counts)

    x = np.array(x0, dtype=float, copy=True)
    invd = 1.0 / np.where(diag != 0.0, diag, 1.0)

    r = b - _matvec_with_rows(rows, indices, data, x, n)
    rel = float(np.linalg.norm(r)) / bnorm
    if rel <= tol:
        return x, 0, rel, 0

    z = invd * r
    p = z.copy()
    rz = float(r @ z)
    iters = 0
    flag = 1
    while iters < max_iter:
        q = _matvec_with_rows(rows, indices, data, p, n)
        pq = float(p @ q)
        if not np.isfinite(pq) or pq <= 0.0:
            flag = 2
            break
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        iters += 1
        if callback is not None:
            callback(iters, x.copy())
        rel = float(np.linalg.norm(r)) / bnorm
        if rel <= tol:
            # Guard against recurrence drift before declaring victory.
            r = b - _matvec_with_rows(rows, indices, data, x, n)
            rel = float(np.linalg.norm(r)) / bnorm
            if rel <= tol:
                flag = 0
                break
            z = invd * r
            p = z.copy()
            rz = float(r @ z)
            continue
        z = invd * r
        rz_new = float(r @ z)
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new
    if not np.all(np.isfinite(x)):
        flag = 2
    return x, iters, rel, flag


def taxis_rhs(tri, area, grad_x, grad_y, chi, s, n_nodes):
    """Assemble r_i = sum_e chibar(e) * area(e) * (grad s)|_e . grad phi_i.

    chi and s are nodal arrays; chibar is the vertex average per element.
    """
    s_el = s[tri]
    sgx = np.einsum("ij,ij->i", s_el, grad_x)
    sgy = np.einsum("ij,ij->i", s_el, grad_y)
    f = chi[tri].mean(axis=1) * area
    contrib = (f * sgx)[:, None] * grad_x + (f * sgy)[:, None] * grad_y
    return np.bincount(
        tri.ravel().astype(np.int64), weights=contrib.ravel(), minlength=n_nodes
    )
