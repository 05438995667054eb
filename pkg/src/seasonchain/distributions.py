"""Joint laws of one season's (drift, transmissibility) pair.

The parametric family: delta ~ Beta(a, b), and tau given delta is log-normal
with log-mean mu0 + mu1 * delta and log-variance sigma2 (mu1 = 0 makes the
coordinates independent; mu1 < 0 makes strains that dodge immunity less
transmissible on average). An optional point mass at delta = 1 supports
full-reset chains; the four bundled presets carry none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._quad import beta_nodes, beta_weighted_quad
from .model import DriftPair

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PairDistribution:
    """delta ~ Beta(a, b); tau | delta ~ LogNormal(mu0 + mu1*delta, sigma2).

    delta_atom is the probability of drawing delta = 1 exactly (immunity
    wiped out); the continuous Beta part carries the remaining mass.
    """

    a: float
    b: float
    mu0: float
    mu1: float = 0.0
    sigma2: float = 0.02
    delta_atom: float = 0.0

    def __post_init__(self):
        if self.a <= 0.0 or self.b <= 0.0:
            raise ValueError("Beta shape parameters must be positive")
        if self.sigma2 <= 0.0:
            raise ValueError("log-variance sigma2 must be positive")
        if not 0.0 <= self.delta_atom < 1.0:
            raise ValueError("delta_atom must lie in [0, 1)")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def log_mean(self, delta):
        """Conditional log-mean of tau given delta."""
        return self.mu0 + self.mu1 * np.asarray(delta, dtype=np.float64)

    # -- sampling -----------------------------------------------------------

    def sample(self, rng: np.random.Generator) -> DriftPair:
        """One pair draw from an explicit generator stream."""
        delta, tau = self.sample_arrays(rng, 1)
        return DriftPair(float(delta[0]), float(tau[0]))

    def sample_arrays(self, rng: np.random.Generator, n: int):
        """n i.i.d. pair draws as arrays (delta, tau).

        Draw order is fixed (atom uniforms, then Beta, then one normal per
        pair), so output is fully determined by the generator state.
        """
        if self.delta_atom > 0.0:
            hit = rng.random(n) < self.delta_atom
            delta = rng.beta(self.a, self.b, n)
            delta[hit] = 1.0
        else:
            delta = rng.beta(self.a, self.b, n)
        tau = np.exp(self.log_mean(delta) + self.sigma * rng.standard_normal(n))
        return delta, tau

    # -- densities ----------------------------------------------------------

    def density(self, delta, tau):
        """Continuous-part joint density q(delta, tau); 0 outside the support.

        With delta_atom > 0 the continuous part integrates to 1 - delta_atom;
        the atom weight is reported by the delta_atom field, not here.
        """
        delta = np.asarray(delta, dtype=np.float64)
        tau = np.asarray(tau, dtype=np.float64)
        inside = (delta > 0.0) & (delta < 1.0) & (tau > 0.0)
        d = np.where(inside, delta, 0.5)
        t = np.where(inside, tau, 1.0)
        q = (stats.beta.pdf(d, self.a, self.b)
             * np.exp(-0.5 * ((np.log(t) - self.log_mean(d)) / self.sigma) ** 2)
             / (t * self.sigma * _SQRT_2PI))
        out = np.where(inside, (1.0 - self.delta_atom) * q, 0.0)
        return out if out.ndim else float(out)

    def marginal_tau_density(self, tau: float) -> float:
        """Density of tau alone: the joint integrated over delta (adaptive)."""
        if tau <= 0.0:
            return 0.0
        atom_part = self.delta_atom * stats.norm.pdf(
            math.log(tau), self.mu0 + self.mu1, self.sigma) / tau
        if self.mu1 == 0.0:
            cont = stats.norm.pdf(math.log(tau), self.mu0, self.sigma) / tau
        else:
            lt = math.log(tau)

            def g(x):
                return math.exp(-0.5 * ((lt - (self.mu0 + self.mu1 * x)) / self.sigma) ** 2)

            cont = beta_weighted_quad(g, self.a, self.b) / (tau * self.sigma * _SQRT_2PI)
        return (1.0 - self.delta_atom) * cont + atom_part

    def marginal_tau_grid(self, taus, n_nodes: int = 128):
        """Vectorized marginal density of tau on an array (fixed-node route)."""
        taus = np.asarray(taus, dtype=np.float64)
        x, w = beta_nodes(self.a, self.b, n_nodes)
        lt = np.log(taus)[:, None]
        vals = np.exp(-0.5 * ((lt - self.log_mean(x)[None, :]) / self.sigma) ** 2) @ w
        cont = vals / (taus * self.sigma * _SQRT_2PI)
        atom_part = self.delta_atom * np.exp(
            -0.5 * ((np.log(taus) - (self.mu0 + self.mu1)) / self.sigma) ** 2) \
            / (taus * self.sigma * _SQRT_2PI)
        return (1.0 - self.delta_atom) * cont + atom_part

    def tau_cdf(self, t: float) -> float:
        """P(tau <= t), mixing the conditional log-normal over delta."""
        if t <= 0.0:
            return 0.0
        lt = math.log(t)
        atom_part = self.delta_atom * stats.norm.cdf(
            (lt - (self.mu0 + self.mu1)) / self.sigma)
        if self.mu1 == 0.0:
            cont = stats.norm.cdf((lt - self.mu0) / self.sigma)
        else:
            cont = beta_weighted_quad(
                lambda x: stats.norm.cdf((lt - (self.mu0 + self.mu1 * x)) / self.sigma),
                self.a, self.b)
        return (1.0 - self.delta_atom) * cont + atom_part

    def tau_support_bound(self, mass_tol: float) -> float:
        """Truncation point t with P(tau > t) <= mass_tol.

        Log-normal quantile at the most generous conditional log-mean over
        delta in [0, 1]; used to truncate tau-integrals (the true support is
        unbounded).
        """
        if not 0.0 < mass_tol <= 1e-3:
            raise ValueError("mass_tol must lie in (0, 1e-3]")
        mu_max = max(self.mu0, self.mu0 + self.mu1)
        return math.exp(mu_max + stats.norm.ppf(1.0 - mass_tol) * self.sigma)


# Preset parameter sets (scenario name -> distribution); cases 1-2 have
# independent coordinates, cases 3-4 negatively correlated ones.
PRESETS: dict[str, PairDistribution] = {
    "case1": PairDistribution(a=3.0, b=7.0, mu0=0.683, mu1=0.0, sigma2=0.02),
    "case2": PairDistribution(a=4.0, b=6.0, mu0=1.08, mu1=0.0, sigma2=0.02),
    "case3": PairDistribution(a=0.5, b=1.5, mu0=0.6, mu1=-0.4, sigma2=0.02),
    "case4": PairDistribution(a=3.0, b=7.0, mu0=0.7, mu1=-0.5, sigma2=0.02),
}

CASE_NAMES = tuple(PRESETS)


def preset(name: str) -> PairDistribution:
    """Look up a preset case by name ("case1".."case4")."""
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {CASE_NAMES}") from None
