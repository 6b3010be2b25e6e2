# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the inner loops in :mod:`bubblespec._pykernels`."""
import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()


def mode_sum_partial(double complex x, long j_start, long j_end):
    cdef double complex total = 0
    cdef double complex comp = 0
    cdef double complex t, term
    cdef double jj
    cdef long j
    if j_end < j_start:
        return 0j
    # Kahan summation from the small tail towards the large head
    for j in range(j_end, j_start - 1, -1):
        jj = <double>j
        term = 1.0 / (jj * jj + x) - comp
        t = total + term
        comp = (t - total) - term
        total = t
    return complex(total)


def quartic_partial(double B, long n):
    cdef double total = 0.0
    cdef double comp = 0.0
    cdef double t, term, j2, b2 = B * B
    cdef long j
    for j in range(n, 0, -1):
        j2 = <double>j * <double>j
        term = 1.0 / (j2 * j2 + b2) - comp
        t = total + term
        comp = (t - total) - term
        total = t
    return total


cdef inline void _matvec_t(const double[:, ::1] A, const double[::1] x, double[::1] y) noexcept nogil:
    # y = A @ x for C-contiguous A (rows, cols), which BLAS sees as the transpose
    cdef char trans = b'T'
    cdef int m = <int>A.shape[1]
    cdef int n = <int>A.shape[0]
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    dgemv(&trans, &m, &n, &one, <double*>&A[0, 0], &m, <double*>&x[0], &inc, &zero, &y[0], &inc)


cdef inline void _rmatvec_t(const double[:, ::1] A, const double[::1] x, double[::1] y) noexcept nogil:
    # y = A.T @ x for C-contiguous A
    cdef char trans = b'N'
    cdef int m = <int>A.shape[1]
    cdef int n = <int>A.shape[0]
    cdef int inc = 1
    cdef double one = 1.0, zero = 0.0
    dgemv(&trans, &m, &n, &one, <double*>&A[0, 0], &m, <double*>&x[0], &inc, &zero, &y[0], &inc)


def nonlinear_projections(const double[::1] c, const double[:, ::1] phi,
                          const double[:, ::1] dphi, const double[::1] lam,
                          const double[::1] weights, const double[::1] y,
                          double kb, double rho_star, double ratio2m1, double z,
                          double rdot_over_R, double zeta_scale):
    cdef Py_ssize_t nq = phi.shape[0]
    cdef Py_ssize_t n = phi.shape[1]
    cdef Py_ssize_t q, k
    cdef double rho, uq, uyq
    cdef double rho_min = 1e308
    cdef double[::1] lc = np.empty(n)
    cdef double[::1] u = np.empty(nq)
    cdef double[::1] uy = np.empty(nq)
    cdef double[::1] lapu = np.empty(nq)
    cdef double[::1] wf = np.empty(nq)
    cdef double[::1] wz = np.empty(nq)
    out_f = np.empty(n)
    out_z = np.empty(n)
    cdef double[::1] of = out_f
    cdef double[::1] oz = out_z
    for k in range(n):
        lc[k] = -lam[k] * c[k]
    with nogil:
        _matvec_t(phi, c, u)
        _matvec_t(dphi, c, uy)
        _matvec_t(phi, lc, lapu)
        for q in range(nq):
            uq = u[q]
            uyq = uy[q]
            rho = rho_star + uq + z
            if rho < rho_min:
                rho_min = rho
            wf[q] = weights[q] * (kb * (rho_star * ratio2m1 - uq - z) / rho * lapu[q]
                                  - kb * rho_star * (1.0 + ratio2m1) * uyq * uyq / (rho * rho)
                                  + rdot_over_R * y[q] * uyq)
            wz[q] = weights[q] * (uq + y[q] * uyq / 3.0) * zeta_scale
        _rmatvec_t(phi, wf, of)
        _rmatvec_t(phi, wz, oz)
    return out_f, out_z, rho_min
