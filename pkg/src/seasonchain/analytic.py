"""Closed-form machinery for the one-season-memory chain (r = 2).

With r = 2 the immunity state collapses to a single number p: last season's
attack ratio. Conditional on p, one season's outcome (z, R_e) is the image
of the random pair (delta, tau) under the final-size map, and everything of
interest has a quadrature/root-finding expression:

* the reachable outcome region and its bounding curves,
* inversion of the outcome map back to (delta, tau),
* the joint outcome density, the no-outbreak probability, the transition
  kernel of the attack-ratio chain, and the forecast density of z given an
  early-season R_e estimate.

All of this assumes the pair law has a joint density, i.e. delta_atom == 0;
distributions carrying a point mass at delta = 1 are simulation-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import betaln
from scipy.stats import norm

from ._backend import kernels
from ._quad import beta_nodes, beta_weighted_quad, panelled_nodes
from .distributions import PairDistribution
from .errors import RegionError

_SQRT_2PI = math.sqrt(2.0 * math.pi)
TAU_BRACKET_CAP = 1e6
TAU_TRUNC_MASS = 1e-10


def _require_density(dist: PairDistribution):
    if dist.delta_atom != 0.0:
        raise ValueError("analytic results require a joint density (delta_atom == 0); "
                         "distributions with a delta atom are simulation-only")


# ---------------------------------------------------------------------------
# curves and region membership
# ---------------------------------------------------------------------------

def curve_z(re: float) -> float:
    """Attack ratio on the no-immunity curve: root of 1 - z = exp(-re*z)."""
    if re <= 1.0:
        return 0.0
    return float(kernels.solve_final_size(np.ones(1), np.asarray([re])))


def curve_re(z):
    """Lower boundary -log(1-z)/z: the R_e that reproduces z with no immunity."""
    z = np.asarray(z, dtype=np.float64)
    out = -np.log1p(-z) / z
    return out if out.ndim else float(out)


def upper_re(p: float, z: float) -> float:
    """Upper reachable R_e at attack ratio z given prior p (inf for z >= 1-p)."""
    if z >= 1.0 - p:
        return math.inf
    return -(1.0 - p) / z * math.log1p(-z / (1.0 - p))


def effective_r(p: float, delta: float, tau: float) -> float:
    """Effective reproduction number tau * (p*delta + 1 - p) for r = 2."""
    return tau * (p * delta + 1.0 - p)


def inversion_residual(delta: float, z: float, re: float, p: float) -> float:
    """Residual whose unique root in delta inverts the outcome map.

    p*exp(-delta*tau*z) + (1-p)*exp(-tau*z) + z - 1 with
    tau = re / (p*delta + 1 - p); strictly decreasing in delta.
    """
    tau = re / (p * delta + 1.0 - p)
    return (p * math.expm1(-delta * tau * z)
            + (1.0 - p) * math.expm1(-tau * z) + z)


def in_reachable_region(p: float, z: float, re: float) -> bool:
    """Whether (z, re) is attainable from prior p by some (delta, tau).

    Equivalent to residual(0) > 0 > residual(1), i.e. to the two-curve
    condition: re above the no-immunity curve and, when z < 1 - p, below
    the full-immunity-contrast curve.
    """
    if not (0.0 < z < 1.0) or re <= 0.0:
        return False
    g1 = math.expm1(-re * z) + z
    g0 = (1.0 - p) * math.expm1(-re * z / (1.0 - p)) + z
    return g0 > 0.0 > g1


def invert_outcome(p: float, z: float, re: float) -> tuple[float, float]:
    """Recover the unique (delta, tau) mapping prior p to outcome (z, re).

    Bisection on the monotone residual, run to float resolution.
    Raises RegionError naming the violated boundary when (z, re) is
    unreachable from p.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"prior attack ratio must lie in (0, 1), got {p!r}")
    if not (0.0 < z < 1.0) or re <= 0.0:
        raise RegionError(f"outcome (z={z!r}, re={re!r}) outside (0,1) x (0,inf)")
    if math.expm1(-re * z) + z >= 0.0:
        raise RegionError(
            f"R_e={re!r} is not above the lower curve -log(1-z)/z={curve_re(z)!r}")
    if (1.0 - p) * math.expm1(-re * z / (1.0 - p)) + z <= 0.0:
        raise RegionError(
            f"R_e={re!r} is not below the upper curve {upper_re(p, z)!r} for z < 1-p")
    d, t = kernels.delta_star_batch(p, np.asarray([z]), np.asarray([re]))
    return float(d[0]), float(t[0])


# ---------------------------------------------------------------------------
# densities conditional on the prior attack ratio
# ---------------------------------------------------------------------------

def outcome_density(dist: PairDistribution, p: float, z, re):
    """Joint density of (z, R_e) on the reachable region, given prior p.

    Accepts scalars or arrays for (z, re); zero outside the region. Points
    within float resolution of the region boundary evaluate to 0 (the
    density may diverge there in the limit, but never returns NaN).
    """
    _require_density(dist)
    if not 0.0 < p < 1.0:
        raise ValueError(f"prior attack ratio must lie in (0, 1), got {p!r}")
    scalar = np.isscalar(z) and np.isscalar(re)
    out = kernels.biv_density_batch(
        p, np.atleast_1d(np.asarray(z, dtype=np.float64)),
        np.atleast_1d(np.asarray(re, dtype=np.float64)),
        dist.a, dist.b, float(betaln(dist.a, dist.b)),
        dist.mu0, dist.mu1, dist.sigma)
    return float(out[0]) if scalar else out


def outbreak_free_prob(dist: PairDistribution, p: float) -> float:
    """Probability of no outbreak next season given prior p: P(R_e <= 1 | p).

    The tau-layer is the conditional log-normal CDF in closed form, leaving
    one adaptive Beta-weighted integral over the drift.
    """
    _require_density(dist)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"prior attack ratio must lie in [0, 1], got {p!r}")
    sig = dist.sigma
    if p == 0.0 and dist.mu1 == 0.0:
        return float(norm.cdf(-dist.mu0 / sig))

    def g(x):
        return norm.cdf((-math.log(p * x + 1.0 - p) - (dist.mu0 + dist.mu1 * x)) / sig)

    return beta_weighted_quad(g, dist.a, dist.b)


# The transition kernel's point mass at 0 is the same quantity.
transition_atom = outbreak_free_prob


def re_density(dist: PairDistribution, p: float, re: float) -> float:
    """Density of R_e alone given prior p (any re > 0).

    On 0 < re <= 1 this is the density along the no-outbreak segment; above 1
    it is the R_e-marginal of the outcome density. At p = 0 it reduces to the
    marginal transmissibility density.
    """
    _require_density(dist)
    if re <= 0.0:
        return 0.0
    if p == 0.0:
        return dist.marginal_tau_density(re)
    sig = dist.sigma

    def g(x):
        scale = p * x + 1.0 - p
        lt = math.log(re / scale)
        return math.exp(-0.5 * ((lt - (dist.mu0 + dist.mu1 * x)) / sig) ** 2) / re

    # pdf of LogNormal at re/scale times 1/scale collapses to exp(...) / re
    return beta_weighted_quad(g, dist.a, dist.b) / (sig * _SQRT_2PI)


def segment_density(dist: PairDistribution, p: float, re: float) -> float:
    """Density of R_e on the no-outbreak segment {z = 0, 0 < re <= 1}."""
    if not 0.0 < re <= 1.0:
        raise ValueError(f"segment density is defined for 0 < re <= 1, got {re!r}")
    return re_density(dist, p, re)


def _curve_pushforward(dist: PairDistribution, p_next: float) -> float:
    """Transition density from a no-immunity prior: tau pushed through the curve."""
    tau_hat = float(curve_re(p_next))
    jac = (math.exp(tau_hat * p_next) - tau_hat) / p_next
    return dist.marginal_tau_density(tau_hat) * jac


def transition_density(dist: PairDistribution, p: float, p_next: float,
                       method: str = "adaptive") -> float:
    """Density of next season's attack ratio at p_next > 0, given prior p.

    p = 0 uses the one-dimensional pushforward along the no-immunity curve
    (the drift integral degenerates there). For p > 0, "adaptive" integrates
    the drift variable with Gauss-Kronrod/QAWS; "fixed" uses the same
    Gauss-Jacobi rule as the precomputed kernel matrix.
    """
    _require_density(dist)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"prior attack ratio must lie in [0, 1), got {p!r}")
    if not 0.0 < p_next < 1.0:
        raise ValueError(f"target attack ratio must lie in (0, 1), got {p_next!r}")
    if p == 0.0:
        return _curve_pushforward(dist, p_next)
    if method == "fixed":
        return float(transition_density_grid(dist, p, np.asarray([p_next]))[0])
    if method != "adaptive":
        raise ValueError(f"unknown method {method!r}")
    sig = dist.sigma

    def g(x):
        ts = kernels.tau_star(p, p_next, x, TAU_BRACKET_CAP, 60)
        if not math.isfinite(ts) or ts <= 0.0:
            return 0.0
        e1 = math.exp(-ts * x * p_next)
        e2 = math.exp(-ts * p_next)
        s = p * x * e1 + (1.0 - p) * e2
        lnpdf = math.exp(-0.5 * ((math.log(ts) - (dist.mu0 + dist.mu1 * x)) / sig) ** 2) \
            / (ts * sig * _SQRT_2PI)
        return lnpdf * (1.0 - ts * s) / (p_next * s)

    return beta_weighted_quad(g, dist.a, dist.b)


def transition_density_grid(dist: PairDistribution, p: float, targets,
                            n_nodes: int = 96) -> np.ndarray:
    """Transition density at many targets in one pass (fixed-node route)."""
    _require_density(dist)
    targets = np.asarray(targets, dtype=np.float64)
    if p == 0.0:
        tau_hat = curve_re(targets)
        jac = (np.exp(tau_hat * targets) - tau_hat) / targets
        return dist.marginal_tau_grid(tau_hat) * jac
    x, w = beta_nodes(dist.a, dist.b, n_nodes)
    return kernels.transition_row(p, targets, x, w, dist.mu0, dist.mu1,
                                  dist.sigma, TAU_BRACKET_CAP)


# ---------------------------------------------------------------------------
# forecast: z given this season's R_e and last season's attack ratio
# ---------------------------------------------------------------------------

def conditional_support(p: float, re: float) -> tuple[float, float]:
    """Attack-ratio interval reachable at effective reproduction number re.

    The upper end is the no-immunity curve value; the lower end solves
    upper_re(p, z) = re (bisection on a monotone map).
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"prior attack ratio must lie in (0, 1), got {p!r}")
    if re <= 1.0:
        raise ValueError(f"conditional support needs re > 1, got {re!r}")
    z_hi = curve_z(re)
    lo, hi = 0.0, min(1.0 - p, z_hi)
    # upper_re increases from 1 at z=0; its value at hi exceeds re by choice of hi
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        if upper_re(p, mid) < re:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), z_hi


def conditional_density(dist: PairDistribution, p: float, re: float, z):
    """Forecast density of this season's attack ratio given (re, p), re > 1.

    Joint outcome density renormalized by the R_e-marginal; integrates to 1
    over the reachable z-interval. z may be a scalar or an array.
    """
    _require_density(dist)
    if re <= 1.0:
        raise ValueError(f"conditional density needs re > 1, got {re!r}")
    denom = re_density(dist, p, re)
    z_arr = np.atleast_1d(np.asarray(z, dtype=np.float64))
    num = outcome_density(dist, p, z_arr, np.full(z_arr.shape, re))
    out = num / denom
    return float(out[0]) if np.isscalar(z) else out


@dataclass(frozen=True)
class ForecastSummary:
    """Forecast of one season's attack ratio: moments, quantiles, density grid.

    Degenerate forecasts (no outbreak, or a no-immunity prior pinning z to
    the curve) have point_mass set and an empty grid.
    """

    mean: float
    sd: float
    quantiles: dict
    grid: np.ndarray
    pdf: np.ndarray
    point_mass: float | None = None


def conditional_summary(dist: PairDistribution, p: float, re: float,
                        n_grid: int = 2049) -> ForecastSummary:
    """Forecast distribution of z given last season's p and observed re.

    re <= 1 forecasts no outbreak with certainty; p = 0 pins z to the
    no-immunity curve. Otherwise integrates the conditional density on an
    endpoint-clustered grid (the density may blow up integrably at either
    end of its support).
    """
    if re <= 1.0:
        q = {k: 0.0 for k in (0.05, 0.25, 0.5, 0.75, 0.95)}
        return ForecastSummary(0.0, 0.0, q, np.array([]), np.array([]), point_mass=0.0)
    if p == 0.0:
        z = curve_z(re)
        q = {k: z for k in (0.05, 0.25, 0.5, 0.75, 0.95)}
        return ForecastSummary(z, 0.0, q, np.array([]), np.array([]), point_mass=z)
    z_lo, z_hi = conditional_support(p, re)
    # integrable blow-ups possible at both ends: (z-z_lo)^(a-1), (z_hi-z)^((b-2)/2)
    grid, w = panelled_nodes(z_lo, z_hi, n_grid, k_lo=4.0, k_hi=4.0)
    pdf = outcome_density(dist, p, grid, np.full(grid.shape, re))
    pdf /= re_density(dist, p, re)
    mass = float(np.sum(w * pdf))
    cdf = np.cumsum(w * pdf) / mass
    mean = float(np.sum(w * pdf * grid) / mass)
    var = float(np.sum(w * pdf * (grid - mean) ** 2) / mass)
    qs = {}
    for level in (0.05, 0.25, 0.5, 0.75, 0.95):
        qs[level] = float(np.interp(level, cdf, grid))
    return ForecastSummary(mean, math.sqrt(max(var, 0.0)), qs, grid, pdf)


# ---------------------------------------------------------------------------
# the full outcome law, bundled
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BivariateLaw:
    """Decomposition of the (z, R_e) law given a prior attack ratio.

    Three mutually exclusive parts: mass on the no-immunity curve (only when
    the prior is 0), mass on the no-outbreak segment {z=0, R_e <= 1}, and an
    absolutely continuous part on the reachable region. Weights sum to 1.
    """

    curve_weight: float
    segment_weight: float
    ac_weight: float
    curve_density: Callable[[float], float]
    segment_density: Callable[[float], float]
    ac_density: Callable[[float, float], float]


def outcome_law(dist: PairDistribution, p: float) -> BivariateLaw:
    """Assemble the full conditional law of (z, R_e) given prior p."""
    _require_density(dist)
    atom = outbreak_free_prob(dist, p)
    if p == 0.0:
        return BivariateLaw(
            curve_weight=1.0 - atom, segment_weight=atom, ac_weight=0.0,
            curve_density=dist.marginal_tau_density,
            segment_density=lambda re: re_density(dist, 0.0, re) if re <= 1.0 else 0.0,
            ac_density=lambda z, re: 0.0)
    return BivariateLaw(
        curve_weight=0.0, segment_weight=atom, ac_weight=1.0 - atom,
        curve_density=lambda re: 0.0,
        segment_density=lambda re: re_density(dist, p, re) if re <= 1.0 else 0.0,
        ac_density=lambda z, re: outcome_density(dist, p, z, re))


def ac_total_mass(dist: PairDistribution, p: float,
                  epsrel: float = 1e-6) -> float:
    """Total mass of the continuous outcome part by direct 2-D quadrature.

    Integrates the joint density over the reachable region (inner integral
    in R_e between the bounding curves); used to cross-check that atom +
    mass = 1 without appealing to the change-of-variables identity.
    """
    _require_density(dist)
    tau_cap = dist.tau_support_bound(TAU_TRUNC_MASS)

    def inner(z):
        lo = float(curve_re(z))
        hi = min(upper_re(p, z), tau_cap)  # R_e <= tau * (p*delta+1-p) <= tau_cap
        if hi <= lo:
            return 0.0
        val, _ = integrate.quad(
            lambda re: float(outcome_density(dist, p, z, re)),
            lo, hi, epsabs=1e-12, epsrel=epsrel, limit=200)
        return val

    val, _ = integrate.quad(inner, 0.0, 1.0 - 1e-12,
                            epsabs=1e-12, epsrel=epsrel, limit=200)
    return val
