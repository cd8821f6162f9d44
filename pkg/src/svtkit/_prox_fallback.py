"""Pure-Python scalar prox kernel.

Fallback implementation with the same entry point as the compiled
extension ``svtkit._prox_kernel``; see :mod:`svtkit._backend` for how one
of the two is selected at import time.  Everything here works on plain
Python floats in a loop, so it is considerably slower than the compiled
kernel on long inputs but numerically equivalent.
"""

import math

import numpy as np

# family codes, kept in sync with penalties.FAMILY_CODES and the .pyx kernel
_L1, _LP, _SCAD, _LOG, _MCP, _GEMAN, _LAPLACE = range(7)


def _value(fam, lam, gam, p, th):
    if fam == _L1:
        return lam * th
    if fam == _LP:
        return lam * th**p
    if fam == _SCAD:
        if th <= lam:
            return lam * th
        if th <= gam * lam:
            return (-(th * th) + 2.0 * gam * lam * th - lam * lam) / (2.0 * (gam - 1.0))
        return 0.5 * lam * lam * (gam + 1.0)
    if fam == _LOG:
        return lam / math.log(gam + 1.0) * math.log(gam * th + 1.0)
    if fam == _MCP:
        if th < gam * lam:
            return lam * th - th * th / (2.0 * gam)
        return 0.5 * gam * lam * lam
    if fam == _GEMAN:
        return lam * th / (th + gam)
    return lam * (1.0 - math.exp(-th / gam))


def _grad(fam, lam, gam, p, th):
    if fam == _L1:
        return lam
    if fam == _LP:
        if th == 0.0:
            return math.inf
        return lam * p * th ** (p - 1.0)
    if fam == _SCAD:
        if th <= lam:
            return lam
        if th <= gam * lam:
            return (gam * lam - th) / (gam - 1.0)
        return 0.0
    if fam == _LOG:
        return lam * gam / (math.log(gam + 1.0) * (gam * th + 1.0))
    if fam == _MCP:
        if th < gam * lam:
            return lam - th / gam
        return 0.0
    if fam == _GEMAN:
        return lam * gam / ((th + gam) * (th + gam))
    return lam / gam * math.exp(-th / gam)


def _prox_one(fam, lam, gam, p, scale, b, tol_factor, max_iter, tie_tol):
    """Solve min_{x>=0} scale*g(x) + (x-b)^2/2 for one b.

    Returns (x, cand, f_cand, iters) where cand/f_cand are NaN when no
    positive stationary candidate exists and iters is -1 when the fixed
    point iteration hit max_iter (x then holds the last iterate).
    """
    nan = math.nan
    if fam == _L1:
        xs = b - scale * lam
        if xs > 0.0:
            fc = scale * lam * xs + 0.5 * (xs - b) * (xs - b)
            return xs, xs, fc, 0
        return 0.0, nan, nan, 0

    if fam == _SCAD:
        # minimum over [0, b]: stationary points of each quadratic piece
        # clipped to its subinterval, plus 0, b and the piece boundaries
        cands = [0.0, b, min(lam, b)]
        if b >= gam * lam:
            cands.append(gam * lam)
        cands.append(min(max(b - scale * lam, 0.0), lam, b))
        denom = gam - 1.0 - scale
        if b > lam and denom != 0.0:
            x2 = (b * (gam - 1.0) - scale * gam * lam) / denom
            cands.append(min(max(x2, lam), gam * lam, b))
        objs = [
            scale * _value(fam, lam, gam, p, x) + 0.5 * (x - b) * (x - b) for x in cands
        ]
        f_min = min(objs)
        best_x = max(x for x, f in zip(cands, objs) if f <= f_min + tie_tol)
        cand, f_cand = nan, nan
        nonzero = [(x, f) for x, f in zip(cands, objs) if x > 0.0]
        if nonzero:
            f_nz = min(f for _, f in nonzero)
            cand = max(x for x, f in nonzero if f <= f_nz + tie_tol)
            f_cand = scale * _value(fam, lam, gam, p, cand) + 0.5 * (cand - b) * (cand - b)
        return best_x, cand, f_cand, 0

    # smooth concave families: fixed-point search for the largest
    # stationary point in [0, b], then compare against 0
    iters = 0
    gb = scale * _grad(fam, lam, gam, p, b)
    if gb == 0.0:
        cand = b
    else:
        x = b
        cand = nan
        tol = tol_factor * max(1.0, b)
        while True:
            if iters >= max_iter:
                return x, nan, nan, -1
            xn = b - scale * _grad(fam, lam, gam, p, x)
            iters += 1
            if xn < 0.0:
                break
            if abs(xn - x) <= tol:
                cand = xn
                break
            x = xn
    if math.isnan(cand):
        return 0.0, nan, nan, iters
    f_cand = scale * _value(fam, lam, gam, p, cand) + 0.5 * (cand - b) * (cand - b)
    f_zero = 0.5 * b * b
    x = cand if f_cand <= f_zero + tie_tol else 0.0
    return x, cand, f_cand, iters


def prox_batch(fam, lam, gam, p, scale, b, tol_factor, max_iter, tie_tol):
    """Vectorized entry point; mirrors the compiled kernel exactly.

    Parameters are the penalty family code, its parameters, the flat
    float64 array ``b`` of prox inputs and the fixed-point controls.
    Returns arrays (x, cand, f_cand, iters) of len(b).
    """
    n = len(b)
    x = np.empty(n)
    cand = np.empty(n)
    f_cand = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    gam_ = 0.0 if gam is None else gam
    p_ = 0.0 if p is None else p
    for i in range(n):
        x[i], cand[i], f_cand[i], iters[i] = _prox_one(
            fam, lam, gam_, p_, scale, float(b[i]), tol_factor, max_iter, tie_tol
        )
    return x, cand, f_cand, iters
