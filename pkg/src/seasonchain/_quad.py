"""Quadrature helpers.

Two routes are used throughout the package:

* adaptive Gauss-Kronrod (``scipy.integrate.quad``) for user-facing density
  evaluations, with the Beta weight handled by QAWS (``weight="alg"``) so that
  endpoint singularities of Beta(a, b) with a < 1 or b < 1 cost no accuracy;
* fixed Gauss-Jacobi rules that absorb the Beta density exactly, for the hot
  paths (transition-kernel matrix assembly, vectorized marginals) where an
  adaptive routine per grid cell would be wasteful.
"""

from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import betaln, roots_jacobi, roots_legendre

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8


@lru_cache(maxsize=64)
def beta_nodes(a: float, b: float, n: int = 80):
    """Nodes/weights integrating g against the Beta(a, b) density on (0, 1).

    sum(w * g(x)) approximates the Beta-weighted integral of g including the
    1/B(a, b) normalization, exactly for polynomial g up to degree 2n-1.
    """
    t, w = roots_jacobi(n, b - 1.0, a - 1.0)
    x = 0.5 * (t + 1.0)
    # map [-1,1] Jacobi weight (1-t)^(b-1) (1+t)^(a-1) to x^(a-1)(1-x)^(b-1) dx
    w = w / 2.0 ** (a + b - 1.0) / np.exp(betaln(a, b))
    return x, w


@lru_cache(maxsize=16)
def legendre_nodes(n: int):
    """Gauss-Legendre nodes/weights on (0, 1)."""
    t, w = roots_legendre(n)
    return 0.5 * (t + 1.0), 0.5 * w


def beta_weighted_quad(g, a: float, b: float,
                       epsabs: float = QUAD_EPSABS, epsrel: float = QUAD_EPSREL) -> float:
    """Adaptive integral of g against the Beta(a, b) density over (0, 1)."""
    val, _ = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(a - 1.0, b - 1.0),
                            epsabs=epsabs, epsrel=epsrel, limit=200)
    return val / np.exp(betaln(a, b))


def panelled_nodes(lo: float, hi: float, n: int,
                   k_lo: float = 1.0, k_hi: float = 1.0, edge: float = 0.2):
    """Composite Gauss rule on (lo, hi) with power-warped edge panels.

    A panel warped by t -> t^k flattens an algebraic endpoint blow-up of
    order > -1 provided k is large enough (k = 4 covers anything milder
    than t^(-3/4)); k = 1 means no special treatment on that side. Returns
    ascending nodes with positive weights.
    """
    t, w = roots_legendre(max(4, n // 3))
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    width = hi - lo
    xs, ws = [], []
    cut_lo, cut_hi = lo, hi
    if k_lo > 1.0:
        cut_lo = lo + edge * width
        xs.append(lo + (cut_lo - lo) * t ** k_lo)
        ws.append((cut_lo - lo) * k_lo * t ** (k_lo - 1.0) * w)
    if k_hi > 1.0:
        cut_hi = hi - edge * width
        xs.append(hi - (hi - cut_hi) * t ** k_hi)
        ws.append((hi - cut_hi) * k_hi * t ** (k_hi - 1.0) * w)
    n_main = max(4, n - sum(x.size for x in xs))
    tm, wm = roots_legendre(n_main)
    xs.append(cut_lo + (cut_hi - cut_lo) * 0.5 * (tm + 1.0))
    ws.append((cut_hi - cut_lo) * 0.5 * wm)
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    order = np.argsort(x)
    return x[order], w[order]


def warped_grid(lo: float, hi: float, n: int):
    """Grid on (lo, hi) clustered at both endpoints, with trapezoid weights.

    Uses the smoothstep map s(u) = 3u^2 - 2u^3 whose derivative vanishes at
    both ends, so integrable endpoint singularities (algebraic blow-ups of
    order > -1) are tamed without knowing their exponents.
    """
    u = np.linspace(0.0, 1.0, n)
    s = u * u * (3.0 - 2.0 * u)
    x = lo + (hi - lo) * s
    ds = 6.0 * u * (1.0 - u) * (hi - lo)
    w = np.gradient(u) * ds  # trapezoid in u, mapped through the warp
    return x, w
