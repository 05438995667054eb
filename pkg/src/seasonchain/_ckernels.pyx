# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of ``_kernels_py``: same signatures, same bracket/iteration
logic, tight C loops. Selected at import time by ``seasonchain._backend``."""

import numpy as np

from libc.math cimport expm1, exp, log, log1p, isfinite, INFINITY, NAN

BACKEND_NAME = "compiled"

cdef double SQRT_2PI = 2.5066282746310002


cdef inline double _final_size_r(const double* w, const double* aexp, int r) except -1.0:
    cdef double lo = 1e-15, hi = 1.0 - 1e-15, mid, h
    cdef int j, it = 0
    while hi - lo > 1e-13:
        it += 1
        if it > 200:
            raise RuntimeError("final-size bisection exceeded iteration cap")
        mid = 0.5 * (lo + hi)
        h = mid
        for j in range(r):
            h += w[j] * expm1(-aexp[j] * mid)
        if h < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_final_size(weights, exponents):
    """Attack ratio z in (0,1) solving z + sum_j w_j expm1(-a_j z) = 0."""
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(exponents, dtype=np.float64)
    cdef int r = w.shape[0]
    cdef double re = 0.0
    cdef int j
    for j in range(r):
        re += w[j] * a[j]
    if re <= 1.0:
        return 0.0
    return _final_size_r(&w[0], &a[0], r)


def run_chain(deltas, taus, int r):
    """Iterate the season map from the immunity-free state."""
    cdef double[::1] d = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(taus, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0], k
    cdef int j
    re_out = np.empty(n)
    z_out = np.empty(n)
    p_out = np.empty((n, r))
    iota_out = np.empty((n, r))
    cdef double[::1] re_v = re_out
    cdef double[::1] z_v = z_out
    cdef double[:, ::1] p_v = p_out
    cdef double[:, ::1] io_v = iota_out
    cdef double[::1] p = np.zeros(r)
    cdef double[::1] iota = np.zeros(r)
    cdef double[::1] aexp = np.empty(r)
    cdef double[::1] zg = np.empty(r)
    cdef double[::1] pn = np.empty(r)
    cdef double re, z, s, dd, tt, prev, nxt
    p[r - 1] = 1.0
    iota[0] = 1.0
    for k in range(n):
        dd = d[k]
        tt = t[k]
        re = 0.0
        for j in range(r):
            aexp[j] = (1.0 - (1.0 - dd) * iota[j]) * tt
            re += p[j] * aexp[j]
        z = _final_size_r(&p[0], &aexp[0], r) if re > 1.0 else 0.0
        for j in range(r):
            zg[j] = -expm1(-aexp[j] * z)
        s = 0.0
        for j in range(r):
            s += p[j] * zg[j]
        pn[0] = s
        for j in range(1, r):
            pn[j] = p[j - 1] * (1.0 - zg[j - 1])
        pn[r - 1] += p[r - 1] * (1.0 - zg[r - 1])
        s = 0.0
        for j in range(r):
            s += pn[j]
        if s - 1.0 > 1e-9 or s - 1.0 < -1e-9:
            raise RuntimeError(f"state mass drifted to {s!r} at season {k}")
        prev = iota[0]
        iota[0] = 1.0
        for j in range(1, r):
            nxt = iota[j]
            iota[j] = prev * (1.0 - dd)
            prev = nxt
        iota[r - 1] = 0.0
        for j in range(r):
            p[j] = pn[j] / s
            p_v[k, j] = p[j]
            io_v[k, j] = iota[j]
        re_v[k] = re
        z_v[k] = z
    return re_out, z_out, p_out, iota_out


cdef inline double _final_size_r2(double p, double a1, double a2) nogil:
    cdef double lo = 1e-15, hi = 1.0 - 1e-15, mid, h
    cdef int it
    for it in range(48):
        mid = 0.5 * (lo + hi)
        h = mid + p * expm1(-a1 * mid) + (1.0 - p) * expm1(-a2 * mid)
        if h < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def one_step_r2(double p, deltas, taus):
    """Season outcomes (re, z) for r=2 from prior attack ratio p, batched."""
    cdef double[::1] d = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(taus, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0], k
    re_out = np.empty(n)
    z_out = np.zeros(n)
    cdef double[::1] re_v = re_out
    cdef double[::1] z_v = z_out
    cdef double re
    for k in range(n):
        re = t[k] * (p * d[k] + 1.0 - p)
        re_v[k] = re
        if re > 1.0:
            z_v[k] = _final_size_r2(p, d[k] * t[k], t[k])
    return re_out, z_out


cdef inline double _delta_star(double p, double z, double re) nogil:
    # assumes region membership was already checked
    cdef double lo = 0.0, hi = 1.0, mid, tau, g
    cdef int it
    for it in range(70):
        mid = 0.5 * (lo + hi)
        tau = re / (p * mid + 1.0 - p)
        g = p * expm1(-mid * tau * z) + (1.0 - p) * expm1(-tau * z) + z
        if g > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def delta_star_batch(double p, z, re):
    """Invert the r=2 forward map; NaN outside the reachable region."""
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] rv = np.ascontiguousarray(re, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], k
    delta = np.empty(n)
    tau = np.empty(n)
    cdef double[::1] dv = delta
    cdef double[::1] tv = tau
    cdef double g0, g1, ds
    for k in range(n):
        g0 = (1.0 - p) * expm1(-rv[k] * zv[k] / (1.0 - p)) + zv[k]
        g1 = expm1(-rv[k] * zv[k]) + zv[k]
        if g0 > 0.0 and g1 < 0.0:
            ds = _delta_star(p, zv[k], rv[k])
            dv[k] = ds
            tv[k] = rv[k] / (p * ds + 1.0 - p)
        else:
            dv[k] = NAN
            tv[k] = NAN
    return delta, tau


cdef inline double _tau_star(double p, double pn, double x, double cap, int iters) nogil:
    cdef double hi = 1.0, lo, mid, w
    while p * expm1(-x * hi * pn) + (1.0 - p) * expm1(-hi * pn) + pn > 0.0:
        hi *= 2.0
        if hi > cap:
            return INFINITY
    lo = 0.5 * hi if hi > 1.0 else 0.0
    if p * expm1(-x * lo * pn) + (1.0 - p) * expm1(-lo * pn) + pn <= 0.0:
        lo = 0.0
    cdef int it
    for it in range(iters):
        mid = 0.5 * (lo + hi)
        w = p * expm1(-x * mid * pn) + (1.0 - p) * expm1(-mid * pn) + pn
        if w > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tau_star(double p, double p_next, double x, double cap=1e6, int iters=60):
    """Transmissibility giving final size p_next for drift x and prior p."""
    return _tau_star(p, p_next, x, cap, iters)


def tau_star_grid(double p, x, p_next, double cap=1e6, int iters=60):
    """tau_star on the outer product of drift nodes x and targets p_next."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(p_next, dtype=np.float64)
    cdef Py_ssize_t nx = xv.shape[0], npn = pv.shape[0], i, j
    out = np.empty((nx, npn))
    cdef double[:, ::1] ov = out
    for i in range(nx):
        for j in range(npn):
            ov[i, j] = _tau_star(p, pv[j], xv[i], cap, iters)
    return out


def biv_density_batch(double p, z, re, double a, double b, double ln_beta,
                      double mu0, double mu1, double sigma):
    """Joint density of (z, re) given prior p at a batch of points."""
    cdef double[::1] zv = np.ascontiguousarray(np.atleast_1d(z), dtype=np.float64)
    cdef double[::1] rv = np.ascontiguousarray(np.atleast_1d(re), dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], k
    out = np.zeros(n)
    cdef double[::1] ov = out
    cdef double g0, g1, d, t, zz, rr, e1, e2, num, den, q, mu
    for k in range(n):
        zz = zv[k]
        rr = rv[k]
        g0 = (1.0 - p) * expm1(-rr * zz / (1.0 - p)) + zz
        g1 = expm1(-rr * zz) + zz
        if g0 <= 0.0 or g1 >= 0.0:
            continue
        d = _delta_star(p, zz, rr)
        if d <= 1e-12 or d >= 1.0 - 1e-12:
            continue
        t = rr / (p * d + 1.0 - p)
        e1 = exp(-d * t * zz)
        e2 = exp(-t * zz)
        num = p * d + 1.0 - p - rr * (p * d * e1 + (1.0 - p) * e2)
        # e^(-d t z) - e^(-t z) in a form that stays finite for huge t
        den = p * (1.0 - p) * rr * zz * (e1 * -expm1(-(1.0 - d) * t * zz))
        mu = mu0 + mu1 * d
        q = exp((a - 1.0) * log(d) + (b - 1.0) * log1p(-d) - ln_beta
                - 0.5 * ((log(t) - mu) / sigma) ** 2) / (t * sigma * SQRT_2PI)
        ov[k] = q * num / den
    return out


cdef inline double _tau_star_warm(double p, double pn, double x, double lo,
                                  double cap) nogil:
    """Root of the tau map with a known lower bracket (warm start).

    Newton safeguarded by the bracket; falls back to a bisection step when
    the Newton step leaves it. Returns INFINITY when no root below cap.
    """
    cdef double hi, t, e1m, e2m, w, wp, t_new
    cdef int it
    hi = 2.0 * lo if lo > 0.5 else 1.0
    while p * expm1(-x * hi * pn) + (1.0 - p) * expm1(-hi * pn) + pn > 0.0:
        hi *= 2.0
        if hi > cap:
            return INFINITY
    if 0.5 * hi > lo:
        # the last doubling that still had w > 0 tightens the bracket
        t = 0.5 * hi
        if p * expm1(-x * t * pn) + (1.0 - p) * expm1(-t * pn) + pn > 0.0:
            lo = t
    t = 0.5 * (lo + hi)
    for it in range(80):
        e1m = expm1(-x * t * pn)
        e2m = expm1(-t * pn)
        w = p * e1m + (1.0 - p) * e2m + pn
        if w > 0.0:
            lo = t
        else:
            hi = t
        wp = -pn * (p * x * (e1m + 1.0) + (1.0 - p) * (e2m + 1.0))
        t_new = t - w / wp
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if t_new - t < 1e-12 * (1.0 + t) and t - t_new < 1e-12 * (1.0 + t):
            return t_new
        t = t_new
    return t


def transition_row(double p, p_next, nodes, wts, double mu0, double mu1,
                   double sigma, double cap=1e6, int iters=60):
    """Transition density from prior p to each target in p_next (p > 0).

    Targets are processed in ascending order so each root solve warm-starts
    from the previous one (the root is increasing in the target).
    """
    cdef double[::1] pv = np.ascontiguousarray(p_next, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(wts, dtype=np.float64)
    cdef Py_ssize_t npn = pv.shape[0], nx = xv.shape[0], i, jj, j
    cdef long[::1] order = np.argsort(p_next).astype(np.int64)
    out = np.zeros(npn)
    cdef double[::1] ov = out
    cdef double ts, pn, x, e1, e2, s, wgt, lnpdf, root
    cdef bint alive
    for i in range(nx):
        x = xv[i]
        root = 0.0
        alive = True
        for jj in range(npn):
            if not alive:
                break
            j = order[jj]
            pn = pv[j]
            ts = _tau_star_warm(p, pn, x, root, cap)
            if not isfinite(ts):
                alive = False
                break
            root = ts
            e1 = exp(-ts * x * pn)
            e2 = exp(-ts * pn)
            s = p * x * e1 + (1.0 - p) * e2
            wgt = (1.0 - ts * s) / (pn * s)
            lnpdf = exp(-0.5 * ((log(ts) - (mu0 + mu1 * x)) / sigma) ** 2) \
                / (ts * sigma * SQRT_2PI)
            ov[j] += wv[i] * lnpdf * wgt
    return out
