"""Monte Carlo engine: long chains, stationary empirics, and smoothing.

This is the oracle for the r = 2 closed forms and the only route for r > 2.
Randomness comes from counter-based Philox streams keyed by (seed, chain id),
so chains are reproducible one by one and independent across ids; within a
chain, all season pairs are drawn up front in one vectorized pass (season k
uses slot k of the stream).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .distributions import PairDistribution
from .errors import SolverError
from .model import ModelConfig
from .analytic import curve_re

DEFAULT_BURN_IN = 500
DEFAULT_WINDOW = 0.02
CSV_SCHEMA = "# schema=1"


def season_stream(seed: int, chain_id: int = 0) -> np.random.Generator:
    """Philox generator for one chain; distinct ids give independent streams."""
    return np.random.Generator(np.random.Philox(key=[seed, chain_id]))


@dataclass(frozen=True)
class ChainRun:
    """One simulated chain: per-season draws, outcomes, and post-season states."""

    r: int
    seed: int
    burn_in: int
    dist: PairDistribution
    deltas: np.ndarray
    taus: np.ndarray
    r_e: np.ndarray
    z: np.ndarray
    p_after: np.ndarray
    iota_after: np.ndarray

    @property
    def n_seasons(self) -> int:
        return self.z.size

    def write_csv(self, path) -> None:
        """Season-by-season export: season, delta, tau, r_e, z_overall, p_1..p_r."""
        cols = [np.arange(self.n_seasons), self.deltas, self.taus, self.r_e, self.z]
        cols += [self.p_after[:, j] for j in range(self.r)]
        header = "season,delta,tau,r_e,z_overall," + ",".join(
            f"p_{j + 1}" for j in range(self.r))
        with open(path, "w") as fh:
            fh.write(CSV_SCHEMA + "\n" + header + "\n")
            for row in zip(*cols):
                fh.write(f"{int(row[0])}," + ",".join(f"{v:.17g}" for v in row[1:]) + "\n")


def run_chain(config: ModelConfig, dist: PairDistribution, seed: int,
              n_seasons: int, burn_in: int = DEFAULT_BURN_IN,
              chain_id: int = 0) -> ChainRun:
    """Iterate the season map from the immunity-free state for n_seasons.

    n_seasons counts kept seasons; burn_in extra seasons are run first and
    recorded (post-burn-in analysis goes through stationary_samples).
    """
    if burn_in < 0 or n_seasons <= 0:
        raise ValueError("need n_seasons > 0 and burn_in >= 0")
    rng = season_stream(seed, chain_id)
    total = n_seasons + burn_in
    deltas, taus = dist.sample_arrays(rng, total)
    try:
        r_e, z, p_after, iota_after = kernels.run_chain(deltas, taus, config.r)
    except RuntimeError as exc:
        raise SolverError(f"chain run failed: {exc}") from exc
    return ChainRun(r=config.r, seed=seed, burn_in=burn_in, dist=dist,
                    deltas=deltas, taus=taus, r_e=r_e, z=z,
                    p_after=p_after, iota_after=iota_after)


@dataclass(frozen=True)
class SampleSet:
    """Aligned stationary samples: one (R_e, z, state) triple per season."""

    r_e: np.ndarray
    z: np.ndarray
    p: np.ndarray

    @property
    def n(self) -> int:
        return self.z.size

    def positive(self) -> "SampleSet":
        """Only the outbreak seasons (z > 0)."""
        keep = self.z > 0.0
        return SampleSet(self.r_e[keep], self.z[keep], self.p[keep])


def stationary_samples(run: ChainRun) -> SampleSet:
    """Post-burn-in season triples; their empirical law estimates the stationary one."""
    k = run.burn_in
    return SampleSet(run.r_e[k:], run.z[k:], run.p_after[k:])


def conditional_window(samples: SampleSet, r_e_target: float,
                       window: float = DEFAULT_WINDOW) -> SampleSet:
    """Seasons whose R_e fell within +-window of the target.

    The caller judges whether the retained count is enough for its purpose.
    """
    if window <= 0.0:
        raise ValueError(f"window must be positive, got {window!r}")
    keep = np.abs(samples.r_e - r_e_target) <= window
    return SampleSet(samples.r_e[keep], samples.z[keep], samples.p[keep])


# ---------------------------------------------------------------------------
# kernel density estimate of the attack-ratio law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KdeEstimate:
    """Smoothed defective density of z: grid values plus the z = 0 atom mass."""

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    defective_mass: float
    n_samples: int

    def write_csv(self, path) -> None:
        """(grid, value) CSV plus a JSON sidecar with atom, bandwidth, n."""
        path = str(path)
        with open(path, "w") as fh:
            fh.write(CSV_SCHEMA + "\nz,density\n")
            for g, v in zip(self.grid, self.values):
                fh.write(f"{g:.17g},{v:.17g}\n")
        side = {"atom": self.defective_mass, "bandwidth": self.bandwidth,
                "n": self.n_samples}
        with open(path + ".json", "w") as fh:
            json.dump(side, fh, indent=2)
            fh.write("\n")


def silverman_bandwidth(x: np.ndarray) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), with a floor for degenerate data."""
    sd = float(np.std(x))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0.0:
        return 1e-3
    return 0.9 * spread * x.size ** (-0.2)


def kde(z_samples: np.ndarray, bandwidth: float | None = None,
        grid_n: int = 512) -> KdeEstimate:
    """Gaussian-kernel density of the positive attack ratios on (0, 1).

    Zero seasons are excluded from the smoothing and reported as the
    defective (atom) mass, so atom + integral is 1 up to boundary leakage.
    Needs at least 30 positive samples.
    """
    z = np.asarray(z_samples, dtype=np.float64)
    n = z.size
    pos = z[z > 0.0]
    if pos.size < 30:
        raise ValueError(f"need at least 30 positive samples, got {pos.size}")
    bw = silverman_bandwidth(pos) if bandwidth is None else float(bandwidth)
    if bw <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    grid = (np.arange(grid_n) + 0.5) / grid_n
    u = (grid[:, None] - pos[None, :]) / bw
    dens = np.exp(-0.5 * u * u).sum(axis=1) / (n * bw * math.sqrt(2.0 * math.pi))
    return KdeEstimate(grid=grid, values=dens, bandwidth=bw,
                       defective_mass=1.0 - pos.size / n, n_samples=n)


# ---------------------------------------------------------------------------
# scatter support check against the no-immunity curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportCheck:
    """How the positive-z samples sit relative to R_e = -log(1-z)/z."""

    n_positive: int
    n_violations: int
    max_violation: float
    distances: np.ndarray

    @property
    def median_distance(self) -> float:
        return float(np.median(self.distances)) if self.distances.size else math.nan


def scatter_support_check(samples: SampleSet, tol: float = 1e-9) -> SupportCheck:
    """Verify R_e exceeds the curve at every outbreak sample.

    Distances are measured vertically in R_e; a violation is a sample more
    than tol below the curve (tol matches the final-size root tolerance).
    """
    pos = samples.positive()
    if pos.n == 0:
        return SupportCheck(0, 0, 0.0, np.array([]))
    dist = pos.r_e - curve_re(pos.z)
    return SupportCheck(
        n_positive=pos.n,
        n_violations=int(np.sum(dist < -tol)),
        max_violation=float(max(0.0, -dist.min())),
        distances=dist)


def one_step_outcomes(dist: PairDistribution, p: float, n: int, seed: int,
                      chain_id: int = 0):
    """(R_e, z) for n independent seasons all starting from r=2 prior p."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"prior attack ratio must lie in [0, 1), got {p!r}")
    rng = season_stream(seed, chain_id)
    deltas, taus = dist.sample_arrays(rng, n)
    return kernels.one_step_r2(p, deltas, taus)
