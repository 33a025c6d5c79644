# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_pykernels``; same algorithms, same results."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def linear_form(coeffs):
    cdef const double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    out_arr = np.zeros(1 << n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t size = 1, i, k
    cdef double v, ci
    with nogil:
        for i in range(n):
            ci = c[i]
            for k in range(size):
                v = out[k]
                out[k + size] = v + ci
                out[k] = v - ci
            size *= 2
    return out_arr


def quadratic_energies(field, pair):
    cdef const double[::1] f = np.ascontiguousarray(field, dtype=np.float64)
    cdef const double[::1] p = np.ascontiguousarray(pair, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    out_arr = np.zeros(1 << n)
    local_arr = np.zeros(1 << (n - 1 if n > 0 else 0))
    cdef double[::1] out = out_arr
    cdef double[::1] local = local_arr
    cdef Py_ssize_t size = 1, lsize, i, j, k
    cdef double v, c, loc
    with nogil:
        for i in range(n):
            local[0] = 0.0
            lsize = 1
            for j in range(i):
                c = p[i - j]
                for k in range(lsize):
                    v = local[k]
                    local[k + lsize] = v + c
                    local[k] = v - c
                lsize *= 2
            for k in range(size):
                loc = local[k] + f[i]
                v = out[k]
                out[k + size] = v + loc
                out[k] = v - loc
            size *= 2
    return out_arr


def transfer_table(log_plus, log_minus, fvals):
    cdef const double[::1] lp = np.ascontiguousarray(log_plus, dtype=np.float64)
    cdef const double[::1] lm = np.ascontiguousarray(log_minus, dtype=np.float64)
    cdef const double[::1] fv = np.ascontiguousarray(fvals, dtype=np.float64)
    cdef Py_ssize_t size = lp.shape[0]
    cdef Py_ssize_t mask = fv.shape[0] - 1
    out_arr = np.empty(size)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t x, s
    with nogil:
        for x in range(size):
            s = (x << 1) & mask
            out[x] = exp(lp[x]) * fv[s | (1 & mask)] + exp(lm[x]) * fv[s]
    return out_arr
