# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the recursive estimators.

Kernel codes: 0 = gaussian, 1 = epanechnikov. Arithmetic order mirrors
``recnw._pycore`` so both backends agree to rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow, fabs

cnp.import_array()

cdef double INV_SQRT_2PI = 0.3989422804014327


cdef inline void _kern(int code, double u, double* k, double* kp) noexcept nogil:
    cdef double e
    if code == 0:
        e = INV_SQRT_2PI * exp(-0.5 * u * u)
        k[0] = e
        kp[0] = -u * e
    else:
        if fabs(u) < 1.0:
            k[0] = 0.75 * (1.0 - u * u)
            kp[0] = -1.5 * u
        else:
            k[0] = 0.0
            kp[0] = 0.0


def stream_update(const double[::1] grid, const double[::1] xs, const double[::1] ys,
                  inv_g, long n0, double alpha, int code,
                  double[::1] H, double[::1] G, double[::1] Hp, double[::1] Gp,
                  C=None, Cp=None):
    """Push ``xs, ys`` through the recursion in place; return the new count."""
    cdef Py_ssize_t m = grid.shape[0]
    cdef Py_ssize_t ns = xs.shape[0]
    cdef Py_ssize_t s, i
    cdef long n = n0
    cdef double h, ih, ih2, r, w, x, y, yg, u, k, kp, kw, kpw
    cdef bint has_c = C is not None
    cdef bint compact = code == 1
    cdef const double[::1] ig
    cdef double[::1] cc
    cdef double[::1] ccp
    if has_c:
        ig = inv_g
        cc = C
        ccp = Cp
    with nogil:
        for s in range(ns):
            n += 1
            h = pow(<double>n, -alpha)
            ih = 1.0 / h
            ih2 = ih * ih
            r = (<double>(n - 1)) / (<double>n)
            w = 1.0 / (<double>n)
            x = xs[s]
            y = ys[s]
            if has_c:
                yg = y * ig[s]
            for i in range(m):
                u = (grid[i] - x) / h
                if compact and fabs(u) >= 1.0:
                    H[i] = r * H[i]
                    G[i] = r * G[i]
                    Hp[i] = r * Hp[i]
                    Gp[i] = r * Gp[i]
                    if has_c:
                        cc[i] = r * cc[i]
                        ccp[i] = r * ccp[i]
                    continue
                _kern(code, u, &k, &kp)
                kw = k * ih
                kpw = kp * ih2
                H[i] = r * H[i] + w * (y * kw)
                G[i] = r * G[i] + w * kw
                Hp[i] = r * Hp[i] + w * (y * kpw)
                Gp[i] = r * Gp[i] + w * kpw
                if has_c:
                    cc[i] = r * cc[i] + w * (yg * kw)
                    ccp[i] = r * ccp[i] + w * (yg * kpw)
    return n


def loo_sums(const double[::1] xs, const double[::1] ys, double alpha, int code,
             const long[::1] eval_idx):
    """Leave-one-out accumulators (H, G, Hp, Gp) at ``xs[k]`` for each k.

    Record k is dropped; the remaining records keep their order and take
    bandwidth indices 1..n-1.
    """
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t ne = eval_idx.shape[0]
    cdef Py_ssize_t a, j, k, pos
    cdef double x, u, kk, kp, kw, kpw, sh, sg, shp, sgp
    cdef double inv_m = 1.0 / (<double>(n - 1))
    out = np.zeros((ne, 4), dtype=np.float64)
    cdef double[:, ::1] o = out
    hs = np.empty(n, dtype=np.float64)
    cdef double[::1] hv = hs
    for j in range(1, n):
        hv[j] = pow(<double>j, -alpha)
    with nogil:
        for a in range(ne):
            k = eval_idx[a]
            x = xs[k]
            sh = 0.0
            sg = 0.0
            shp = 0.0
            sgp = 0.0
            for j in range(n):
                if j == k:
                    continue
                pos = j + 1 if j < k else j
                u = (x - xs[j]) / hv[pos]
                if code == 1 and fabs(u) >= 1.0:
                    continue
                _kern(code, u, &kk, &kp)
                kw = kk / hv[pos]
                kpw = kp / (hv[pos] * hv[pos])
                sh += ys[j] * kw
                sg += kw
                shp += ys[j] * kpw
                sgp += kpw
            o[a, 0] = sh * inv_m
            o[a, 1] = sg * inv_m
            o[a, 2] = shp * inv_m
            o[a, 3] = sgp * inv_m
    return out
