# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: CSR matvec, Jacobi-CG and the taxis assembly loop.

Twinned with the numpy versions in pycore.py; the two backends are held
to agreement by the parity tests.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


cdef void _matvec(const long long[::1] indptr, const long long[::1] indices,
                  const double[::1] data, const double[::1] x,
                  double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc


def csr_matvec(indptr, indices, data, x):
    """y = A @ x for CSR arrays."""
    out = np.empty(indptr.shape[0] - 1, dtype=np.float64)
    _matvec(indptr, indices, data, x, out)
    return out


cdef double _norm2(const double[::1] v) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(v.shape[0]):
        acc += v[i] * v[i]
    return sqrt(acc)


cdef double _dot(const double[::1] a, const double[::1] b) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


def cg_jacobi(indptr, indices, data, diag, b, x0, double tol, long max_iter):
    """Jacobi-preconditioned CG; same contract as pycore.cg_jacobi."""
    cdef const long long[::1] ip = indptr
    cdef const long long[::1] ix = indices
    cdef const double[::1] ad = data
    cdef const double[::1] dg = diag
    cdef const double[::1] bv = b
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef Py_ssize_t i
    cdef double bnorm = _norm2(bv)
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0, 0

    x_arr = np.array(x0, dtype=np.float64, copy=True)
    r_arr = np.empty(n, dtype=np.float64)
    z_arr = np.empty(n, dtype=np.float64)
    p_arr = np.empty(n, dtype=np.float64)
    q_arr = np.empty(n, dtype=np.float64)
    invd_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] r = r_arr
    cdef double[::1] z = z_arr
    cdef double[::1] p = p_arr
    cdef double[::1] q = q_arr
    cdef double[::1] invd = invd_arr

    for i in range(n):
        invd[i] = 1.0 / (dg[i] if dg[i] != 0.0 else 1.0)

    _matvec(ip, ix, ad, x, q)
    for i in range(n):
        r[i] = bv[i] - q[i]
    cdef double rel = _norm2(r) / bnorm
    if rel <= tol:
        return x_arr, 0, rel, 0

    for i in range(n):
        z[i] = invd[i] * r[i]
        p[i] = z[i]
    cdef double rz = _dot(r, z)
    cdef double pq, alpha, beta, rz_new
    cdef long iters = 0
    cdef int flag = 1
    while iters < max_iter:
        _matvec(ip, ix, ad, p, q)
        pq = _dot(p, q)
        if not isfinite(pq) or pq <= 0.0:
            flag = 2
            break
        alpha = rz / pq
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * q[i]
        iters += 1
        rel = _norm2(r) / bnorm
        if rel <= tol:
            _matvec(ip, ix, ad, x, q)
            for i in range(n):
                r[i] = bv[i] - q[i]
            rel = _norm2(r) / bnorm
            if rel <= tol:
                flag = 0
                break
            for i in range(n):
                z[i] = invd[i] * r[i]
                p[i] = z[i]
            rz = _dot(r, z)
            continue
        rz_new = 0.0
        for i in range(n):
            z[i] = invd[i] * r[i]
            rz_new += r[i] * z[i]
        beta = rz_new / rz
        for i in range(n):
            p[i] = z[i] + beta * p[i]
        rz = rz_new
    for i in range(n):
        if not isfinite(x[i]):
            flag = 2
            break
    return x_arr, iters, rel, flag


def taxis_rhs(tri, area, grad_x, grad_y, chi, s, Py_ssize_t n_nodes):
    """Element loop for the chemotaxis right-hand side."""
    cdef const int[:, ::1] t = tri
    cdef const double[::1] ar = area
    cdef const double[:, ::1] gx = grad_x
    cdef const double[:, ::1] gy = grad_y
    cdef const double[::1] ch = chi
    cdef const double[::1] sv = s
    out = np.zeros(n_nodes, dtype=np.float64)
    cdef double[::1] r = out
    cdef Py_ssize_t e, k, ne = t.shape[0]
    cdef int i0, i1, i2
    cdef double sgx, sgy, f
    for e in range(ne):
        i0 = t[e, 0]
        i1 = t[e, 1]
        i2 = t[e, 2]
        sgx = sv[i0] * gx[e, 0] + sv[i1] * gx[e, 1] + sv[i2] * gx[e, 2]
        sgy = sv[i0] * gy[e, 0] + sv[i1] * gy[e, 1] + sv[i2] * gy[e, 2]
        f = ((ch[i0] + ch[i1] + ch[i2]) / 3.0) * ar[e]
        r[i0] += f * (sgx * gx[e, 0] + sgy * gy[e, 0])
        r[i1] += f * (sgx * gx[e, 1] + sgy * gy[e, 1])
        r[i2] += f * (sgx * gx[e, 2] + sgy * gy[e, 2])
    return out
