# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise kernel sums for the collective peakon dynamics.

Twin of `_pairwise_py`; same signatures, same conventions (kernel kinds:
0 = exponential on the line, 1 = periodic circle of circumference 2*pi;
kernel derivative zero at coincidence).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cosh, exp, fabs, sinh, M_PI

cnp.import_array()


cdef inline double _wrap(double x) nogil:
    cdef double r = x
    while r > M_PI:
        r -= 2.0 * M_PI
    while r <= -M_PI:
        r += 2.0 * M_PI
    return r


cdef inline void _kernel(int kind, double alpha, double x,
                         double* g, double* dg) nogil:
    cdef double ax, den, r
    if kind == 0:
        ax = fabs(x)
        g[0] = exp(-ax / alpha) / (2.0 * alpha)
        if x > 0:
            dg[0] = -g[0] / alpha
        elif x < 0:
            dg[0] = g[0] / alpha
        else:
            dg[0] = 0.0
    else:
        r = _wrap(x)
        ax = fabs(r)
        den = 2.0 * alpha * sinh(M_PI / alpha)
        g[0] = cosh((ax - M_PI) / alpha) / den
        if r > 0:
            dg[0] = sinh((ax - M_PI) / alpha) / (den * alpha)
        elif r < 0:
            dg[0] = -sinh((ax - M_PI) / alpha) / (den * alpha)
        else:
            dg[0] = 0.0


def hamiltonian_d1(double[::1] Q, double[::1] P, double[:, ::1] sigma,
                   double[::1] w, double c, int kind1, double a1,
                   int kind2, double a2):
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t k = sigma.shape[1]
    cdef Py_ssize_t i, j, a
    cdef double total = 0.0, g1, dg1, g2, dg2, ss
    for i in range(n):
        for j in range(n):
            _kernel(kind1, a1, Q[i] - Q[j], &g1, &dg1)
            _kernel(kind2, a2, Q[i] - Q[j], &g2, &dg2)
            ss = 0.0
            for a in range(k):
                ss += sigma[i, a] * sigma[j, a]
            total += w[i] * w[j] * (P[i] * P[j] * g1 + c * ss * g2)
    return 0.5 * total


def rhs_d1(double[::1] Q, double[::1] P, double[:, ::1] sigma,
           double[::1] w, double c, int kind1, double a1,
           int kind2, double a2):
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t k = sigma.shape[1]
    cdef Py_ssize_t i, j, a
    cdef double g1, dg1, g2, dg2, ss, wj
    dQ_np = np.zeros(n)
    dP_np = np.zeros(n)
    xi_np = np.zeros((n, k))
    cdef double[::1] dQ = dQ_np
    cdef double[::1] dP = dP_np
    cdef double[:, ::1] xi = xi_np
    for i in range(n):
        for j in range(n):
            wj = w[j]
            _kernel(kind1, a1, Q[i] - Q[j], &g1, &dg1)
            _kernel(kind2, a2, Q[i] - Q[j], &g2, &dg2)
            ss = 0.0
            for a in range(k):
                ss += sigma[i, a] * sigma[j, a]
                xi[i, a] += wj * g2 * sigma[j, a]
            dQ[i] += wj * P[j] * g1
            dP[i] -= wj * (P[i] * P[j] * dg1 + c * ss * dg2)
    return dQ_np, dP_np, xi_np
