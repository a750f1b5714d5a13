# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels.

Every element writes only its own output slot and each CSR row is reduced
sequentially, so results do not depend on the number of threads.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt
cimport openmp

cnp.import_array()

cdef double _S = 0.70710678118654752440


cdef inline void _tet_grad(const double[:, ::1] X, const long long[:, ::1] T, Py_ssize_t e,
                           double* g, double* vol) noexcept nogil:
    cdef double J[3][3]
    cdef double inv[3][3]
    cdef double det
    cdef int i, j
    cdef long long n0 = T[e, 0]
    for i in range(3):
        for j in range(3):
            J[i][j] = X[T[e, i + 1], j] - X[n0, j]
    det = (J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1])
           - J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0])
           + J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]))
    inv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / det
    inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det
    inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det
    inv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / det
    inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det
    inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det
    inv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / det
    inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det
    inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det
    # grad lambda_{a} (a = 1..3) is column a-1 of J^{-1}
    for i in range(3):
        g[3 + 3 * i + 0] = inv[0][i]
        g[3 + 3 * i + 1] = inv[1][i]
        g[3 + 3 * i + 2] = inv[2][i]
    for j in range(3):
        g[j] = -(g[3 + j] + g[6 + j] + g[9 + j])
    vol[0] = det / 6.0


cdef void _tet_elem(const double[:, ::1] X, const long long[:, ::1] T, const double[:, ::1] D,
                    Py_ssize_t e, double[:, :, ::1] out) noexcept nogil:
    cdef int a, I, J, c
    cdef double g[12]
    cdef double B[6][12]
    cdef double DB[6][12]
    cdef double vol, s
    _tet_grad(X, T, e, g, &vol)
    for I in range(6):
        for c in range(12):
            B[I][c] = 0.0
    for a in range(4):
        c = 3 * a
        B[0][c] = g[c]
        B[1][c + 1] = g[c + 1]
        B[2][c + 2] = g[c + 2]
        B[3][c + 1] = _S * g[c + 2]
        B[3][c + 2] = _S * g[c + 1]
        B[4][c] = _S * g[c + 2]
        B[4][c + 2] = _S * g[c]
        B[5][c] = _S * g[c + 1]
        B[5][c + 1] = _S * g[c]
    for I in range(6):
        for c in range(12):
            s = 0.0
            for J in range(6):
                s = s + D[I, J] * B[J][c]
            DB[I][c] = s
    for a in range(12):
        for c in range(12):
            s = 0.0
            for I in range(6):
                s = s + B[I][a] * DB[I][c]
            out[e, a, c] = vol * s


def tet_stiffness(const double[:, ::1] nodes, const long long[:, ::1] tets, const double[:, ::1] D):
    """Element matrices vol * B^T D B, shape (n, 12, 12)."""
    cdef Py_ssize_t n = tets.shape[0]
    out_arr = np.empty((n, 12, 12))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t e
    for e in prange(n, nogil=True, schedule="static"):
        _tet_elem(nodes, tets, D, e, out)
    return out_arr


cdef void _tri_elem(const double[:, ::1] X, const long long[:, ::1] T, Py_ssize_t e,
                    double[:, :, ::1] k, double[:, :, ::1] m) noexcept nogil:
    cdef int i, j, d
    cdef double E[3][3]
    cdef double cx, cy, cz, area, s
    for d in range(3):
        E[0][d] = X[T[e, 2], d] - X[T[e, 1], d]
        E[1][d] = X[T[e, 0], d] - X[T[e, 2], d]
        E[2][d] = X[T[e, 1], d] - X[T[e, 0], d]
    # normal = e2 x (-e1)
    cx = -(E[2][1] * E[1][2] - E[2][2] * E[1][1])
    cy = -(E[2][2] * E[1][0] - E[2][0] * E[1][2])
    cz = -(E[2][0] * E[1][1] - E[2][1] * E[1][0])
    area = 0.5 * sqrt(cx * cx + cy * cy + cz * cz)
    for i in range(3):
        for j in range(3):
            s = 0.0
            for d in range(3):
                s = s + E[i][d] * E[j][d]
            k[e, i, j] = s / (4.0 * area)
            if i == j:
                m[e, i, j] = area / 6.0
            else:
                m[e, i, j] = area / 12.0


def tri_lb_mass(const double[:, ::1] nodes, const long long[:, ::1] tri):
    """P1 Laplace-Beltrami stiffness and consistent mass per flat triangle."""
    cdef Py_ssize_t n = tri.shape[0]
    k_arr = np.empty((n, 3, 3))
    m_arr = np.empty((n, 3, 3))
    cdef double[:, :, ::1] k = k_arr
    cdef double[:, :, ::1] m = m_arr
    cdef Py_ssize_t e
    for e in prange(n, nogil=True, schedule="static"):
        _tri_elem(nodes, tri, e, k, m)
    return k_arr, m_arr


def set_num_threads(int n):
    openmp.omp_set_num_threads(n)


def get_max_threads():
    return openmp.omp_get_max_threads()


def csr_matvec(const int[::1] indptr, const int[::1] indices, const double[::1] data, const double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    y_arr = np.empty(n)
    cdef double[::1] y = y_arr
    cdef Py_ssize_t i
    cdef int p
    cdef double s
    for i in prange(n, nogil=True, schedule="static"):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s = s + data[p] * x[indices[p]]
        y[i] = s
    return y_arr
