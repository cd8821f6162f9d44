# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar prox kernel.

Same contract as :mod:`svtkit._prox_fallback`; see there for the
reference implementation and the meaning of the returned arrays.
"""

from libc.math cimport exp, fabs, log, pow, NAN, INFINITY, isnan

import numpy as np

cdef enum:
    L1 = 0
    LP = 1
    SCAD = 2
    LOG = 3
    MCP = 4
    GEMAN = 5
    LAPLACE = 6


cdef inline double _value(int fam, double lam, double gam, double p, double th) nogil:
    if fam == L1:
        return lam * th
    if fam == LP:
        return lam * pow(th, p)
    if fam == SCAD:
        if th <= lam:
            return lam * th
        if th <= gam * lam:
            return (-(th * th) + 2.0 * gam * lam * th - lam * lam) / (2.0 * (gam - 1.0))
        return 0.5 * lam * lam * (gam + 1.0)
    if fam == LOG:
        return lam / log(gam + 1.0) * log(gam * th + 1.0)
    if fam == MCP:
        if th < gam * lam:
            return lam * th - th * th / (2.0 * gam)
        return 0.5 * gam * lam * lam
    if fam == GEMAN:
        return lam * th / (th + gam)
    return lam * (1.0 - exp(-th / gam))


cdef inline double _grad(int fam, double lam, double gam, double p, double th) nogil:
    if fam == L1:
        return lam
    if fam == LP:
        if th == 0.0:
            return INFINITY
        return lam * p * pow(th, p - 1.0)
    if fam == SCAD:
        if th <= lam:
            return lam
        if th <= gam * lam:
            return (gam * lam - th) / (gam - 1.0)
        return 0.0
    if fam == LOG:
        return lam * gam / (log(gam + 1.0) * (gam * th + 1.0))
    if fam == MCP:
        if th < gam * lam:
            return lam - th / gam
        return 0.0
    if fam == GEMAN:
        return lam * gam / ((th + gam) * (th + gam))
    return lam / gam * exp(-th / gam)


cdef inline double _fb(int fam, double lam, double gam, double p, double scale,
                       double x, double b) nogil:
    return scale * _value(fam, lam, gam, p, x) + 0.5 * (x - b) * (x - b)


cdef int _prox_one(int fam, double lam, double gam, double p, double scale,
                   double b, double tol_factor, long max_iter, double tie_tol,
                   double* out_x, double* out_cand, double* out_fcand,
                   long* out_iters) nogil:
    cdef double xs, fc, f_zero, denom, x2, f_min, f_nz, x, xn, tol, cand
    cdef double cands[6]
    cdef double objs[6]
    cdef int ncand, j
    cdef long iters

    if fam == L1:
        xs = b - scale * lam
        if xs > 0.0:
            out_x[0] = xs
            out_cand[0] = xs
            out_fcand[0] = scale * lam * xs + 0.5 * (xs - b) * (xs - b)
        else:
            out_x[0] = 0.0
            out_cand[0] = NAN
            out_fcand[0] = NAN
        out_iters[0] = 0
        return 0

    if fam == SCAD:
        cands[0] = 0.0
        cands[1] = b
        cands[2] = lam if lam < b else b
        ncand = 3
        if b >= gam * lam:
            cands[ncand] = gam * lam
            ncand += 1
        xs = b - scale * lam
        if xs < 0.0:
            xs = 0.0
        if xs > lam:
            xs = lam
        if xs > b:
            xs = b
        cands[ncand] = xs
        ncand += 1
        denom = gam - 1.0 - scale
        if b > lam and denom != 0.0:
            x2 = (b * (gam - 1.0) - scale * gam * lam) / denom
            if x2 < lam:
                x2 = lam
            if x2 > gam * lam:
                x2 = gam * lam
            if x2 > b:
                x2 = b
            cands[ncand] = x2
            ncand += 1
        f_min = INFINITY
        for j in range(ncand):
            objs[j] = _fb(fam, lam, gam, p, scale, cands[j], b)
            if objs[j] < f_min:
                f_min = objs[j]
        out_x[0] = -1.0
        for j in range(ncand):
            if objs[j] <= f_min + tie_tol and cands[j] > out_x[0]:
                out_x[0] = cands[j]
        f_nz = INFINITY
        for j in range(ncand):
            if cands[j] > 0.0 and objs[j] < f_nz:
                f_nz = objs[j]
        if f_nz == INFINITY:
            out_cand[0] = NAN
            out_fcand[0] = NAN
        else:
            cand = -1.0
            for j in range(ncand):
                if cands[j] > 0.0 and objs[j] <= f_nz + tie_tol and cands[j] > cand:
                    cand = cands[j]
            out_cand[0] = cand
            out_fcand[0] = _fb(fam, lam, gam, p, scale, cand, b)
        out_iters[0] = 0
        return 0

    # smooth concave families: fixed-point search then candidate comparison
    iters = 0
    if scale * _grad(fam, lam, gam, p, b) == 0.0:
        cand = b
    else:
        x = b
        cand = NAN
        tol = tol_factor * (1.0 if b < 1.0 else b)
        while True:
            if iters >= max_iter:
                out_x[0] = x
                out_cand[0] = NAN
                out_fcand[0] = NAN
                out_iters[0] = -1
                return 1
            xn = b - scale * _grad(fam, lam, gam, p, x)
            iters += 1
            if xn < 0.0:
                break
            if fabs(xn - x) <= tol:
                cand = xn
                break
            x = xn
    if isnan(cand):
        out_x[0] = 0.0
        out_cand[0] = NAN
        out_fcand[0] = NAN
        out_iters[0] = iters
        return 0
    fc = _fb(fam, lam, gam, p, scale, cand, b)
    f_zero = 0.5 * b * b
    out_x[0] = cand if fc <= f_zero + tie_tol else 0.0
    out_cand[0] = cand
    out_fcand[0] = fc
    out_iters[0] = iters
    return 0


def prox_batch(int fam, double lam, double gam, double p, double scale,
               double[::1] b, double tol_factor, long max_iter, double tie_tol):
    """Vectorized scalar prox; see the fallback module for the contract."""
    cdef Py_ssize_t n = b.shape[0]
    x_arr = np.empty(n)
    cand_arr = np.empty(n)
    fcand_arr = np.empty(n)
    iters_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] x = x_arr
    cdef double[::1] cand = cand_arr
    cdef double[::1] fcand = fcand_arr
    cdef long[::1] iters = iters_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _prox_one(fam, lam, gam, p, scale, b[i], tol_factor, max_iter,
                      tie_tol, &x[i], &cand[i], &fcand[i], &iters[i])
    return x_arr, cand_arr, fcand_arr, iters_arr
