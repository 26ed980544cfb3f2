# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``; same signatures and results."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, erf, erfc, log, sqrt, fabs, M_PI

cnp.import_array()

cdef double INV_SQRT2 = 1.0 / sqrt(2.0)
cdef double INV_SQRT2PI = 1.0 / sqrt(2.0 * M_PI)


cdef inline double _expit(double x) nogil:
    cdef double z
    if x >= 0:
        z = exp(-x)
        return 1.0 / (1.0 + z)
    z = exp(x)
    return z / (1.0 + z)


def feature_matrix(Z, pis, gamma, int act=0):
    cdef const double[:, ::1] z = np.ascontiguousarray(Z, dtype=np.float64)
    cdef const double[:, ::1] p = np.ascontiguousarray(pis, dtype=np.float64)
    cdef const double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0], d = z.shape[1], nq = g.shape[0]
    cdef Py_ssize_t dq = p.shape[0] // nq
    out_arr = np.zeros((n, dq), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t t, j, k, m, row
    cdef double arg, acc
    with nogil:
        for t in range(n):
            for j in range(dq):
                acc = 0.0
                for k in range(nq):
                    row = j * nq + k
                    arg = p[row, 0]
                    for m in range(d):
                        arg = arg + p[row, m + 1] * z[t, m]
                    if act == 0:
                        acc = acc + g[k] * _expit(arg)
                    else:
                        acc = acc + g[k] * 0.5 * (1.0 + erf(arg))
                out[t, j] = acc
    return out_arr


def binary_cube_terms(F, y, theta, int link, double clamp):
    cdef const double[:, ::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef const double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0], dq = f.shape[1]
    score_arr = np.zeros(dq, dtype=np.float64)
    hess_arr = np.zeros((dq, dq), dtype=np.float64)
    cdef double[::1] score = score_arr
    cdef double[:, ::1] hess = hess_arr
    cdef Py_ssize_t t, i, j
    cdef double s, cdf, sf, pdf, dpdf, v, resid, w1, w2, loglik = 0.0
    cdef long n_clamped = 0
    with nogil:
        for t in range(n):
            s = 0.0
            for i in range(dq):
                s = s + f[t, i] * th[i]
            if link == 0:
                cdf = 0.5 * erfc(-s * INV_SQRT2)
                sf = 0.5 * erfc(s * INV_SQRT2)
                pdf = INV_SQRT2PI * exp(-0.5 * s * s)
                dpdf = -s * pdf
            else:
                cdf = _expit(s)
                sf = _expit(-s)
                pdf = cdf * sf
                dpdf = pdf * (sf - cdf)
            if cdf < clamp or sf < clamp:
                n_clamped += 1
            if cdf < clamp:
                cdf = clamp
            elif cdf > 1.0 - clamp:
                cdf = 1.0 - clamp
            if sf < clamp:
                sf = clamp
            elif sf > 1.0 - clamp:
                sf = 1.0 - clamp
            loglik = loglik + yy[t] * log(cdf) + (1.0 - yy[t]) * log(sf)
            v = cdf * sf
            resid = yy[t] - cdf
            w1 = resid * pdf / v
            w2 = -pdf * pdf / v + resid * dpdf / v - resid * pdf * pdf * (sf - cdf) / (v * v)
            for i in range(dq):
                score[i] = score[i] + w1 * f[t, i]
                for j in range(i + 1):
                    hess[i, j] = hess[i, j] + w2 * f[t, i] * f[t, j]
        for i in range(dq):
            for j in range(i):
                hess[j, i] = hess[i, j]
    return loglik, score_arr, hess_arr, int(n_clamped)


def product_kernel_weights(X, x0, double h, int kernel):
    cdef const double[:, ::1] xx = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] x0v = np.ascontiguousarray(np.atleast_2d(x0), dtype=np.float64)
    cdef Py_ssize_t n = xx.shape[0], d = xx.shape[1], ne = x0v.shape[0]
    out_arr = np.zeros((ne, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t e, t, m
    cdef double w, u
    with nogil:
        for e in range(ne):
            for t in range(n):
                w = 1.0
                for m in range(d):
                    u = (xx[t, m] - x0v[e, m]) / h
                    if fabs(u) > 1.0:
                        w = 0.0
                        break
                    if kernel == 0:
                        w = w * 0.5
                    else:
                        w = w * 0.75 * (1.0 - u * u)
                out[e, t] = w
    return out_arr
