# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver hot kernels: injection and Jacobian assembly.

Same contract as sgml.powerflow._accel_py; selected by sgml.powerflow.accel
when the build produced this extension.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def calc_injections(double[:, :] g, double[:, :] b, double[:] vm, double[:] va):
    cdef Py_ssize_t n = vm.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_arr = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q_arr = np.zeros(n)
    cdef double[:] p = p_arr
    cdef double[:] q = q_arr
    cdef Py_ssize_t i, j
    cdef double th, ct, st, vv, pi, qi
    for i in range(n):
        pi = 0.0
        qi = 0.0
        for j in range(n):
            if g[i, j] == 0.0 and b[i, j] == 0.0:
                continue
            th = va[i] - va[j]
            ct = cos(th)
            st = sin(th)
            vv = vm[i] * vm[j]
            pi += vv * (g[i, j] * ct + b[i, j] * st)
            qi += vv * (g[i, j] * st - b[i, j] * ct)
        p[i] = pi
        q[i] = qi
    return p_arr, q_arr


def build_jacobian(double[:, :] g, double[:, :] b, double[:] vm, double[:] va,
                   double[:] p, double[:] q,
                   cnp.ndarray[cnp.intp_t, ndim=1] pvpq,
                   cnp.ndarray[cnp.intp_t, ndim=1] pq):
    cdef Py_ssize_t na = pvpq.shape[0]
    cdef Py_ssize_t nq = pq.shape[0]
    cdef Py_ssize_t size = na + nq
    cdef cnp.ndarray[cnp.float64_t, ndim=2] jac_arr = np.zeros((size, size))
    cdef double[:, :] jac = jac_arr
    cdef Py_ssize_t r, c
    cdef Py_ssize_t i, j
    cdef double th, ct, st

    # dP rows
    for r in range(na):
        i = pvpq[r]
        for c in range(na):
            j = pvpq[c]
            if i == j:
                jac[r, c] = -q[i] - b[i, i] * vm[i] * vm[i]
            else:
                th = va[i] - va[j]
                jac[r, c] = vm[i] * vm[j] * (g[i, j] * sin(th) - b[i, j] * cos(th))
        for c in range(nq):
            j = pq[c]
            if i == j:
                jac[r, na + c] = p[i] / vm[i] + g[i, i] * vm[i]
            else:
                th = va[i] - va[j]
                jac[r, na + c] = vm[i] * (g[i, j] * cos(th) + b[i, j] * sin(th))
    # dQ rows
    for r in range(nq):
        i = pq[r]
        for c in range(na):
            j = pvpq[c]
            if i == j:
                jac[na + r, c] = p[i] - g[i, i] * vm[i] * vm[i]
            else:
                th = va[i] - va[j]
                jac[na + r, c] = -vm[i] * vm[j] * (g[i, j] * cos(th) + b[i, j] * sin(th))
        for c in range(nq):
            j = pq[c]
            if i == j:
                jac[na + r, na + c] = q[i] / vm[i] - b[i, i] * vm[i]
            else:
                th = va[i] - va[j]
                jac[na + r, na + c] = vm[i] * (g[i, j] * sin(th) - b[i, j] * cos(th))
    return jac_arr
