# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled block-tridiagonal solver (block Thomas algorithm).

Each diagonal block is factorised by Gaussian elimination with partial
pivoting; the blocks are small (d <= a few) and the chain is long.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef int _lu_solve(double[:, ::1] a, double[:, ::1] b, int d, int m) noexcept nogil:
    """Overwrite b (d x m) with a^-1 b; a (d x d) is destroyed. Returns 1 if singular."""
    cdef int i, j, k, p
    cdef double piv, f, tmp
    for k in range(d):
        p = k
        piv = fabs(a[k, k])
        for i in range(k + 1, d):
            if fabs(a[i, k]) > piv:
                piv = fabs(a[i, k])
                p = i
        if piv == 0.0:
            return 1
        if p != k:
            for j in range(d):
                tmp = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = tmp
            for j in range(m):
                tmp = b[k, j]
                b[k, j] = b[p, j]
                b[p, j] = tmp
        for i in range(k + 1, d):
            f = a[i, k] / a[k, k]
            if f != 0.0:
                for j in range(k + 1, d):
                    a[i, j] -= f * a[k, j]
                for j in range(m):
                    b[i, j] -= f * b[k, j]
    for k in range(d - 1, -1, -1):
        for j in range(m):
            tmp = b[k, j]
            for i in range(k + 1, d):
                tmp -= a[k, i] * b[i, j]
            b[k, j] = tmp / a[k, k]
    return 0


def block_thomas(double[:, :, ::1] lower, double[:, :, ::1] diag,
                 double[:, :, ::1] upper, double[:, :, ::1] rhs):
    """Solve the block-tridiagonal system.

    Row j reads lower[j] w[j-1] + diag[j] w[j] + upper[j] w[j+1] = rhs[j];
    lower[0] and upper[n-1] are ignored.  Shapes (n, d, d) and (n, d, m).
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef int d = <int> diag.shape[1]
    cdef int m = <int> rhs.shape[2]
    cdef Py_ssize_t j
    cdef int i, k, c, flag = 0
    cdef double acc
    # work[j] holds [C_j | g_j] = D'_j^-1 [U_j | r'_j]
    work_arr = np.empty((n, d, d + m), dtype=np.float64)
    piv_arr = np.empty((d, d), dtype=np.float64)
    out_arr = np.empty((n, d, m), dtype=np.float64)
    cdef double[:, :, ::1] work = work_arr
    cdef double[:, ::1] piv = piv_arr
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for j in range(n):
            for i in range(d):
                for k in range(d):
                    acc = diag[j, i, k]
                    if j > 0:
                        for c in range(d):
                            acc -= lower[j, i, c] * work[j - 1, c, k]
                    piv[i, k] = acc
                for k in range(d):
                    work[j, i, k] = upper[j, i, k] if j < n - 1 else 0.0
                for k in range(m):
                    acc = rhs[j, i, k]
                    if j > 0:
                        for c in range(d):
                            acc -= lower[j, i, c] * work[j - 1, c, d + k]
                    work[j, i, d + k] = acc
            if _lu_solve(piv, work[j], d, d + m):
                flag = 1
                break
        if not flag:
            for i in range(d):
                for k in range(m):
                    out[n - 1, i, k] = work[n - 1, i, d + k]
            for j in range(n - 2, -1, -1):
                for i in range(d):
                    for k in range(m):
                        acc = work[j, i, d + k]
                        for c in range(d):
                            acc -= work[j, i, c] * out[j + 1, c, k]
                        out[j, i, k] = acc
    if flag:
        raise ZeroDivisionError("singular diagonal block in block-tridiagonal solve")
    return out_arr


def radial_remainder(double[:, :, ::1] pts, double[:, ::1] r, double[:, ::1] z,
                     double[:, ::1] d1, double[:, ::1] d2, double[:, ::1] d3,
                     double[::1] weights):
    """Weighted sum over l of D^3 V1(pts[l, j]){z_j, z_j} for a radial V1.

    pts has shape (L, n, d); r, d1, d2, d3 hold |pts| and V1', V1'', V1'''
    at those points, shape (L, n).  Returns shape (n, d).
    """
    cdef Py_ssize_t L = pts.shape[0]
    cdef Py_ssize_t n = pts.shape[1]
    cdef int d = <int> pts.shape[2]
    cdef Py_ssize_t l, j
    cdef int i
    cdef double rr, a, zz, bp, t1, cu, cz, wl
    out_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for j in range(n):
            zz = 0.0
            for i in range(d):
                zz += z[j, i] * z[j, i]
            for l in range(L):
                rr = r[l, j]
                wl = weights[l]
                a = 0.0
                for i in range(d):
                    a += pts[l, j, i] * z[j, i]
                a /= rr
                bp = d2[l, j] / rr - d1[l, j] / (rr * rr)
                t1 = (d2[l, j] - d1[l, j] / rr) / rr
                cu = (d3[l, j] - bp) * a * a + t1 * (zz - 2.0 * a * a)
                cz = (t1 + bp) * a
                for i in range(d):
                    out[j, i] += wl * (cu * pts[l, j, i] / rr + cz * z[j, i])
    return out_arr
