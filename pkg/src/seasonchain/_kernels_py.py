"""Pure-NumPy implementations of the numerical hot kernels.

This module is the fallback twin of the compiled ``_ckernels`` extension:
identical function signatures, identical bracketing/iteration logic, so the
two backends agree to floating-point round-off. Scalar root finds are plain
bisections (guaranteed convergence on the monotone functions used here);
batch versions run the same bisection synchronously across NumPy arrays.
"""

import numpy as np

BACKEND_NAME = "python"

_SQRT_2PI = 2.5066282746310002


def solve_final_size(weights, exponents):
    """Attack ratio z in (0,1) solving z + sum_j w_j expm1(-a_j z) = 0.

    Returns 0.0 when the epidemic threshold sum_j w_j a_j <= 1 is not
    exceeded. Absolute tolerance 1e-13 on z; iteration cap 200.
    """
    w = np.asarray(weights, dtype=np.float64)
    a = np.asarray(exponents, dtype=np.float64)
    if np.dot(w, a) <= 1.0:
        return 0.0
    lo, hi = 1e-15, 1.0 - 1e-15
    it = 0
    while hi - lo > 1e-13:
        it += 1
        if it > 200:
            raise RuntimeError("final-size bisection exceeded iteration cap")
        mid = 0.5 * (lo + hi)
        h = mid + np.dot(w, np.expm1(-a * mid))
        if h < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_chain(deltas, taus, r):
    """Iterate the season map from the immunity-free state.

    Returns (re, z, p_after, iota_after) where row k holds the outcome of
    season k and the state entering season k+1.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    taus = np.asarray(taus, dtype=np.float64)
    n = deltas.size
    p = np.zeros(r)
    p[-1] = 1.0
    iota = np.zeros(r)
    iota[0] = 1.0
    re_out = np.empty(n)
    z_out = np.empty(n)
    p_out = np.empty((n, r))
    iota_out = np.empty((n, r))
    for k in range(n):
        d, t = deltas[k], taus[k]
        aexp = (1.0 - (1.0 - d) * iota) * t
        re = float(np.dot(p, aexp))
        z = solve_final_size(p, aexp) if re > 1.0 else 0.0
        zg = -np.expm1(-aexp * z)
        pn = np.empty(r)
        pn[0] = np.dot(p, zg)
        pn[1:] = p[:-1] * (1.0 - zg[:-1])
        pn[-1] += p[-1] * (1.0 - zg[-1])
        s = pn.sum()
        if abs(s - 1.0) > 1e-9:
            raise RuntimeError(f"state mass drifted to {s!r} at season {k}")
        pn /= s
        iota_n = np.empty(r)
        iota_n[0] = 1.0
        iota_n[1:] = iota[:-1] * (1.0 - d)
        iota_n[-1] = 0.0
        re_out[k] = re
        z_out[k] = z
        p = pn
        iota = iota_n
        p_out[k] = p
        iota_out[k] = iota
    return re_out, z_out, p_out, iota_out


def one_step_r2(p, deltas, taus):
    """Season outcomes (re, z) for r=2 from prior attack ratio p, batched."""
    d = np.asarray(deltas, dtype=np.float64)
    t = np.asarray(taus, dtype=np.float64)
    re = t * (p * d + 1.0 - p)
    z = np.zeros_like(re)
    act = re > 1.0
    if np.any(act):
        a1 = d[act] * t[act]
        a2 = t[act]
        lo = np.full(a1.shape, 1e-15)
        hi = np.full(a1.shape, 1.0 - 1e-15)
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            h = mid + p * np.expm1(-a1 * mid) + (1.0 - p) * np.expm1(-a2 * mid)
            neg = h < 0.0
            lo = np.where(neg, mid, lo)
            hi = np.where(neg, hi, mid)
        z[act] = 0.5 * (lo + hi)
    return re, z


def delta_star_batch(p, z, re):
    """Invert the r=2 forward map: recover (delta, tau) from (z, re) given p.

    Bisection on the monotone map G(delta); entries outside the reachable
    region come back as NaN.
    """
    z = np.asarray(z, dtype=np.float64)
    re = np.asarray(re, dtype=np.float64)
    g0 = (1.0 - p) * np.expm1(-re * z / (1.0 - p)) + z
    g1 = np.expm1(-re * z) + z
    ok = (g0 > 0.0) & (g1 < 0.0)
    delta = np.full(z.shape, np.nan)
    tau = np.full(z.shape, np.nan)
    if np.any(ok):
        zz, rr = z[ok], re[ok]
        lo = np.zeros(zz.shape)
        hi = np.ones(zz.shape)
        for _ in range(70):
            mid = 0.5 * (lo + hi)
            t = rr / (p * mid + 1.0 - p)
            g = p * np.expm1(-mid * t * zz) + (1.0 - p) * np.expm1(-t * zz) + zz
            pos = g > 0.0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        ds = 0.5 * (lo + hi)
        delta[ok] = ds
        tau[ok] = rr / (p * ds + 1.0 - p)
    return delta, tau


def tau_star(p, p_next, x, cap=1e6, iters=60):
    """Transmissibility making the final size equal p_next for drift x, prior p.

    Root of p*expm1(-x*t*p_next) + (1-p)*expm1(-t*p_next) + p_next = 0.
    Returns inf when no root exists below cap.
    """

    def w(t):
        return (p * np.expm1(-x * t * p_next)
                + (1.0 - p) * np.expm1(-t * p_next) + p_next)

    hi = 1.0
    while w(hi) > 0.0:
        hi *= 2.0
        if hi > cap:
            return np.inf
    lo = 0.5 * hi if hi > 1.0 else 0.0
    if w(lo) <= 0.0:
        lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if w(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tau_star_grid(p, x, p_next, cap=1e6, iters=60):
    """tau_star on the outer product of drift nodes x and targets p_next.

    Returns a (len(x), len(p_next)) matrix with inf marking no root below cap.
    """
    x = np.asarray(x, dtype=np.float64)[:, None]
    pn = np.asarray(p_next, dtype=np.float64)[None, :]

    def w(t):
        return p * np.expm1(-x * t * pn) + (1.0 - p) * np.expm1(-t * pn) + pn

    hi = np.ones(np.broadcast_shapes(x.shape, pn.shape))
    for _ in range(64):
        grow = (w(hi) > 0.0) & (hi <= cap)
        if not grow.any():
            break
        hi = np.where(grow, hi * 2.0, hi)
    dead = w(hi) > 0.0
    lo = np.where(hi > 1.0, 0.5 * hi, 0.0)
    lo = np.where(w(lo) <= 0.0, 0.0, lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = w(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    out = 0.5 * (lo + hi)
    out[dead] = np.inf
    return out


def biv_density_batch(p, z, re, a, b, ln_beta, mu0, mu1, sigma):
    """Joint density of (z, re) given prior p at a batch of points.

    Zero outside the reachable region; the near-boundary factor
    exp(-d*t*z) - exp(-t*z) is evaluated in expm1 form.
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    re = np.atleast_1d(np.asarray(re, dtype=np.float64))
    delta, tau = delta_star_batch(p, z, re)
    out = np.zeros(z.shape)
    ok = np.isfinite(delta) & (delta > 1e-12) & (delta < 1.0 - 1e-12)
    if np.any(ok):
        d, t, zz, rr = delta[ok], tau[ok], z[ok], re[ok]
        e1 = np.exp(-d * t * zz)
        e2 = np.exp(-t * zz)
        num = p * d + 1.0 - p - rr * (p * d * e1 + (1.0 - p) * e2)
        # e^(-d t z) - e^(-t z) in a form that stays finite for huge t
        den = p * (1.0 - p) * rr * zz * (e1 * -np.expm1(-(1.0 - d) * t * zz))
        q = np.exp((a - 1.0) * np.log(d) + (b - 1.0) * np.log1p(-d) - ln_beta
                   - 0.5 * ((np.log(t) - (mu0 + mu1 * d)) / sigma) ** 2) \
            / (t * sigma * _SQRT_2PI)
        out[ok] = q * num / den
    return out


def transition_row(p, p_next, nodes, wts, mu0, mu1, sigma, cap=1e6, iters=60):
    """Transition density from prior p to each target in p_next (p > 0).

    Fixed-node quadrature against the Beta density (nodes/weights from
    ``_quad.beta_nodes``); the integrand needs one tau_star root per
    (node, target) pair.
    """
    pn = np.asarray(p_next, dtype=np.float64)
    x = np.asarray(nodes, dtype=np.float64)
    ts = tau_star_grid(p, x, pn, cap=cap, iters=iters)
    ok = np.isfinite(ts)
    ts_safe = np.where(ok, ts, 1.0)
    e1 = np.exp(-ts_safe * x[:, None] * pn[None, :])
    e2 = np.exp(-ts_safe * pn[None, :])
    s = p * x[:, None] * e1 + (1.0 - p) * e2
    wgt = (1.0 - ts_safe * s) / (pn[None, :] * s)
    lnpdf = np.exp(-0.5 * ((np.log(ts_safe) - (mu0 + mu1 * x[:, None])) / sigma) ** 2) \
        / (ts_safe * sigma * _SQRT_2PI)
    integrand = np.where(ok, lnpdf * wgt, 0.0)
    return np.asarray(wts) @ integrand
