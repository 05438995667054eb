"""Long-run law of the r = 2 attack-ratio chain, and laws derived from it.

The stationary law mixes a point mass at 0 (a season with no outbreak) with
a density on (0, z_bar). It is found by power iteration of the transition
operator on a uniform grid; the expensive part, the grid-to-grid kernel
matrix, is assembled once per distribution by the active backend and each
entry is a drift-integral needing one transmissibility root per quadrature
node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import betaln
from scipy.stats import norm

from ._backend import kernels
from ._quad import beta_nodes, panelled_nodes, warped_grid
from .analytic import (TAU_BRACKET_CAP, TAU_TRUNC_MASS, _require_density,
                       curve_re, curve_z, outbreak_free_prob, upper_re)
from .distributions import PairDistribution
from .errors import ConvergenceError

_SQRT_2PI = math.sqrt(2.0 * math.pi)
Z_BAR_UNBOUNDED = 1.0 - 1e-9


@dataclass(frozen=True)
class MixedDensity1D:
    """A probability law on [0, 1): one atom plus a density on a grid.

    The atom sits at atom_location (0 for transition/stationary laws, the
    no-immunity curve value for conditional forecasts). Values are density
    evaluations at grid points; integration is trapezoidal.
    """

    atom_mass: float
    grid: np.ndarray
    values: np.ndarray
    support_upper: float
    atom_location: float = 0.0

    def __call__(self, x):
        """Interpolated density at x (zero outside the support)."""
        x = np.asarray(x, dtype=np.float64)
        out = np.interp(x, self.grid, self.values, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def density_mass(self) -> float:
        """Mass of the continuous part via the trapezoid rule."""
        return float(np.trapezoid(self.values, self.grid))

    def total_mass(self) -> float:
        """Atom plus continuous mass; should be 1 within quadrature tolerance."""
        return self.atom_mass + self.density_mass()

    def mean(self) -> float:
        m = float(np.trapezoid(self.values * self.grid, self.grid))
        return self.atom_mass * self.atom_location + m


def support_upper_bound(dist: PairDistribution) -> float:
    """Upper end z_bar of the stationary support.

    The conditional log-normal transmissibility is unbounded above, so the
    reachable attack ratios accumulate at 1; a bounded-support law would
    instead stop at the final size of its largest transmissibility.
    """
    _require_density(dist)
    return Z_BAR_UNBOUNDED


def _atom_row(dist: PairDistribution, priors: np.ndarray, nodes, wts) -> np.ndarray:
    """P(no outbreak | prior) for a vector of priors, fixed-node quadrature."""
    scale = priors[:, None] * nodes[None, :] + 1.0 - priors[:, None]
    zsc = (-np.log(scale) - dist.log_mean(nodes)[None, :]) / dist.sigma
    return norm.cdf(zsc) @ wts


def _curve_row(dist: PairDistribution, targets: np.ndarray) -> np.ndarray:
    """Transition density from the immunity-free state to each target."""
    tau_hat = curve_re(targets)
    jac = (np.exp(tau_hat * targets) - tau_hat) / targets
    return dist.marginal_tau_grid(tau_hat) * jac


def transition_matrix(dist: PairDistribution, grid: np.ndarray,
                      kernel_nodes: int = 96) -> np.ndarray:
    """Kernel matrix K[i, j] = transition density from grid[i] to grid[j]."""
    nodes, wts = beta_nodes(dist.a, dist.b, kernel_nodes)
    k = np.empty((grid.size, grid.size))
    for i, p in enumerate(grid):
        k[i] = kernels.transition_row(float(p), grid, nodes, wts,
                                      dist.mu0, dist.mu1, dist.sigma,
                                      TAU_BRACKET_CAP, 48)
    return k


@lru_cache(maxsize=8)
def stationary_solve(dist: PairDistribution, grid_n: int = 512,
                     tol: float = 1e-8, max_sweeps: int = 10_000,
                     kernel_nodes: int = 96) -> MixedDensity1D:
    """Stationary law of the attack-ratio chain by fixed-point iteration.

    Midpoint grid on (0, z_bar); each sweep pushes the current (atom,
    density) pair through the transition operator and renormalizes, until
    the L1 change drops below tol. Raises ConvergenceError at max_sweeps.
    Results are cached per (distribution, settings); treat them read-only.
    """
    _require_density(dist)
    if grid_n < 64:
        raise ValueError(f"grid_n must be at least 64, got {grid_n}")
    z_bar = support_upper_bound(dist)
    h = z_bar / grid_n
    grid = (np.arange(grid_n) + 0.5) * h

    nodes, wts = beta_nodes(dist.a, dist.b, kernel_nodes)
    kmat = transition_matrix(dist, grid, kernel_nodes)
    atom_from = _atom_row(dist, grid, nodes, wts)
    from_zero = _curve_row(dist, grid)
    pi00 = outbreak_free_prob(dist, 0.0)

    atom = 0.5
    dens = np.full(grid_n, 0.5 / (h * grid_n))
    for _ in range(max_sweeps):
        atom_new = atom * pi00 + h * float(dens @ atom_from)
        dens_new = atom * from_zero + h * (dens @ kmat)
        total = atom_new + h * dens_new.sum()
        atom_new /= total
        dens_new /= total
        change = abs(atom_new - atom) + h * np.abs(dens_new - dens).sum()
        atom, dens = atom_new, dens_new
        if change < tol:
            return MixedDensity1D(atom_mass=atom, grid=grid, values=dens,
                                  support_upper=z_bar)
    raise ConvergenceError(
        f"stationary iteration did not reach {tol} in {max_sweeps} sweeps")


# ---------------------------------------------------------------------------
# stationary joint and conditional laws of (z, R_e)
# ---------------------------------------------------------------------------

def prior_threshold(z: float, re: float) -> float:
    """Smallest prior attack ratio from which outcome (z, re) is reachable.

    Root in p of upper_re(p, z) = re, which increases from the lower-curve
    value at p = 0 to infinity at p = 1 - z.
    """
    if re <= curve_re(z):
        raise ValueError("outcome below the lower curve is unreachable from any prior")
    lo, hi = 0.0, 1.0 - z
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        if upper_re(mid, z) < re:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _density_over_priors(dist: PairDistribution, priors: np.ndarray,
                         z: float, re: float) -> np.ndarray:
    """Outcome density f(z, re | prior) vectorized over the prior.

    Same bisection/formula as the per-prior kernels, but synchronized across
    a vector of priors for the stationary mixing integral.
    """
    ps = np.asarray(priors, dtype=np.float64)
    g1 = math.expm1(-re * z) + z
    g0 = (1.0 - ps) * np.expm1(-re * z / (1.0 - ps)) + z
    ok = (g0 > 0.0) & (g1 < 0.0) & (ps > 0.0) & (ps < 1.0)
    out = np.zeros(ps.shape)
    if not np.any(ok):
        return out
    p = ps[ok]
    lo = np.zeros(p.shape)
    hi = np.ones(p.shape)
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        tau = re / (p * mid + 1.0 - p)
        g = p * np.expm1(-mid * tau * z) + (1.0 - p) * np.expm1(-tau * z) + z
        pos = g > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    d = 0.5 * (lo + hi)
    interior = (d > 1e-12) & (d < 1.0 - 1e-12)
    t = re / (p * d + 1.0 - p)
    e1 = np.exp(-d * t * z)
    e2 = np.exp(-t * z)
    num = p * d + 1.0 - p - re * (p * d * e1 + (1.0 - p) * e2)
    # e^(-d t z) - e^(-t z) written to stay finite for huge t (e1 <= 1)
    den = p * (1.0 - p) * re * z * (e1 * -np.expm1(-(1.0 - d) * t * z))
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.exp((dist.a - 1.0) * np.log(d) + (dist.b - 1.0) * np.log1p(-d)
                   - betaln(dist.a, dist.b)
                   - 0.5 * ((np.log(t) - dist.log_mean(d)) / dist.sigma) ** 2) \
            / (t * dist.sigma * _SQRT_2PI)
        f = np.where(interior, q * num / den, 0.0)
    out[ok] = f
    return out


def stationary_outcome_density(dist: PairDistribution, stat: MixedDensity1D,
                               z: float, re: float, n_nodes: int = 128) -> float:
    """Stationary joint density of (z, R_e) over {0 < z < 1, R_e > 1}.

    Zero on or below the no-immunity curve; otherwise the per-prior outcome
    density mixed over the stationary density of priors that can reach the
    point. The integrand can blow up algebraically at the reachability
    threshold, so the prior axis is warped toward that endpoint.
    """
    if not 0.0 < z < 1.0 or re <= 1.0 or re <= curve_re(z):
        return 0.0
    p_lo = prior_threshold(z, re)
    p_hi = stat.support_upper
    if p_lo >= p_hi:
        return 0.0
    priors, w = _prior_panels(p_lo, p_hi, dist.a, n_nodes)
    f = _density_over_priors(dist, priors, z, re)
    return float(np.sum(w * f * stat(priors)))


def _prior_panels(p_lo: float, p_hi: float, a: float, n_nodes: int):
    """Composite rule on (p_lo, p_hi) for the stationary mixing integral.

    An edge panel warped by t^(1/a) absorbs the (p - p_lo)^(a-1) blow-up of
    the drift density (present when a < 1); a plain panel covers the rest,
    where the integrand is a smooth bump.
    """
    split = p_lo + 0.1 * (p_hi - p_lo)
    n_edge = n_nodes // 2
    t, w = _power_nodes(n_edge, max(1.0, 1.0 / a))
    x_edge = p_lo + (split - p_lo) * t
    w_edge = (split - p_lo) * w
    from ._quad import legendre_nodes
    u, v = legendre_nodes(n_nodes - n_edge)
    x_main = split + (p_hi - split) * u
    w_main = (p_hi - split) * v
    return np.concatenate([x_edge, x_main]), np.concatenate([w_edge, w_main])


def _power_nodes(n: int, power: float):
    """Gauss-Legendre nodes pushed through t -> t^power on (0, 1)."""
    from ._quad import legendre_nodes
    u, w = legendre_nodes(n)
    t = u ** power
    return t, w * power * u ** (power - 1.0)


def stationary_conditional(dist: PairDistribution, stat: MixedDensity1D,
                           re: float, n_grid: int = 513) -> MixedDensity1D:
    """Stationary forecast law of the attack ratio given R_e = re > 1.

    Mixes an atom at the no-immunity curve value (the chain was at 0 and the
    whole season is pinned by tau) with a continuous part below it.
    """
    _require_density(dist)
    if re <= 1.0:
        raise ValueError(f"conditional law needs re > 1, got {re!r}")
    z_hi = curve_z(re)
    curve_mass = stat.atom_mass * dist.marginal_tau_density(re)
    # the density can blow up like (z_hi - z)^((b-2)/2) at the upper end
    grid, w = panelled_nodes(0.0, z_hi, n_grid, k_hi=4.0)
    vals = np.array([stationary_outcome_density(dist, stat, g, re) for g in grid])
    cont_mass = float(np.sum(w * vals))
    denom = curve_mass + cont_mass
    return MixedDensity1D(atom_mass=curve_mass / denom, grid=grid,
                          values=vals / denom, support_upper=z_hi,
                          atom_location=z_hi)


@dataclass
class StationaryMassReport:
    """Bookkeeping of the stationary one-step (z, R_e) law, by component."""

    curve: float
    segment: float
    continuous: float
    details: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.curve + self.segment + self.continuous


def stationary_mass_report(dist: PairDistribution, stat: MixedDensity1D,
                           n_z: int = 96, n_re: int = 96) -> StationaryMassReport:
    """Decompose the stationary one-step outcome law into its three parts.

    curve: prior was 0 and tau exceeded 1 (outcome pinned to the curve);
    segment: no outbreak (z = 0, R_e <= 1), whatever the prior;
    continuous: 2-D quadrature of the stationary joint density.
    The three should sum to 1 within the grid/quadrature tolerance.
    """
    _require_density(dist)
    curve = stat.atom_mass * (1.0 - dist.tau_cdf(1.0))
    nodes, wts = beta_nodes(dist.a, dist.b, 96)
    seg = stat.atom_mass * dist.tau_cdf(1.0) + float(
        np.trapezoid(_atom_row(dist, stat.grid, nodes, wts) * stat.values, stat.grid))
    tau_cap = dist.tau_support_bound(TAU_TRUNC_MASS)
    zs, zw = warped_grid(0.0, stat.support_upper, n_z)
    cont = 0.0
    for z, wz in zip(zs[1:-1], zw[1:-1]):
        lo = float(curve_re(z))
        hi = tau_cap
        if hi <= lo:
            continue
        # blow-up of order (re - lo)^((b-2)/2) at the lower curve
        res, rw = panelled_nodes(lo, hi, n_re, k_lo=4.0)
        inner = sum(wr * stationary_outcome_density(dist, stat, z, r)
                    for r, wr in zip(res, rw))
        cont += wz * inner
    return StationaryMassReport(curve=curve, segment=seg, continuous=cont)
