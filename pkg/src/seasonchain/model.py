"""Season-to-season epidemic dynamics for arbitrary immunity memory r >= 2.

The community entering a season is described by an :class:`ImmunityState`:
the share ``p[j]`` of people last infected j+1 seasons ago (the last slot
pools everyone with no immunity) and the residual protection ``iota[j]`` of
each such group. A season is driven by one :class:`DriftPair` (delta, tau):
delta is the fraction of existing immunity erased by between-season viral
evolution, tau the new strain's basic reproduction number. The season
resolves instantaneously through its final-size equation; within-season
dynamics are out of scope.

All functions are pure; nothing here owns mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import SolverError, StateError

MASS_TOL = 1e-12
RENORM_TOL = 1e-9


@dataclass(frozen=True)
class ModelConfig:
    """Model-level settings: r = number of years until immunity is fully lost."""

    r: int

    def __post_init__(self):
        if not isinstance(self.r, int) or self.r < 2:
            raise ValueError(f"r must be an integer >= 2, got {self.r!r}")


@dataclass(frozen=True)
class DriftPair:
    """One season's draw: genetic drift delta in [0, 1] and transmissibility tau > 0."""

    delta: float
    tau: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta!r}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau!r}")


@dataclass(frozen=True)
class ImmunityState:
    """Markov-chain state: group shares p and their immunity levels iota.

    Index j = 0..r-1 means "last infected j+1 seasons ago"; the final slot
    pools everyone with no remaining immunity, so iota[0] = 1 and
    iota[r-1] = 0 always.
    """

    p: np.ndarray
    iota: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=np.float64))
        object.__setattr__(self, "iota", np.asarray(self.iota, dtype=np.float64))
        self.validate()

    @property
    def r(self) -> int:
        return self.p.size

    def validate(self) -> None:
        p, iota = self.p, self.iota
        if p.ndim != 1 or iota.shape != p.shape or p.size < 2:
            raise StateError("p and iota must be equal-length vectors, length >= 2")
        if np.any(p < 0.0):
            raise StateError("group shares must be nonnegative")
        if abs(p.sum() - 1.0) > MASS_TOL:
            raise StateError(f"group shares sum to {p.sum()!r}, not 1")
        if iota[0] != 1.0 or iota[-1] != 0.0:
            raise StateError("immunity levels must have iota[0] = 1 and iota[-1] = 0")
        if np.any(iota < 0.0) or np.any(iota > 1.0) or np.any(np.diff(iota) > 0.0):
            raise StateError("immunity levels must be non-increasing within [0, 1]")


@dataclass(frozen=True)
class SeasonOutcome:
    """One season's resolution: R_e, per-group attack ratios, overall attack ratio."""

    r_e: float
    z_groups: np.ndarray
    z_overall: float


def naive_state(config: ModelConfig) -> ImmunityState:
    """The immunity-free state: everyone pooled in the no-immunity slot."""
    p = np.zeros(config.r)
    p[-1] = 1.0
    iota = np.zeros(config.r)
    iota[0] = 1.0
    return ImmunityState(p, iota)


def exposure_exponents(state: ImmunityState, pair: DriftPair) -> np.ndarray:
    """Per-group effective exposures a_j = (1 - (1 - delta) * iota_j) * tau."""
    return (1.0 - (1.0 - pair.delta) * state.iota) * pair.tau


def effective_reproduction(state: ImmunityState, pair: DriftPair) -> float:
    """Mean secondary cases at season start; an outbreak occurs iff > 1."""
    return float(np.dot(state.p, exposure_exponents(state, pair)))


def solve_overall_final_size(state: ImmunityState, pair: DriftPair) -> float:
    """Overall attack ratio z: unique root in (0,1) of the final-size equation.

    Returns 0 when effective_reproduction <= 1. Bracketed bisection on
    1 - z = sum_j p_j exp(-a_j z), evaluated in expm1 form; absolute
    tolerance 1e-12 with an iteration cap that raises instead of clamping.
    """
    try:
        return float(kernels.solve_final_size(state.p, exposure_exponents(state, pair)))
    except RuntimeError as exc:
        raise SolverError(str(exc)) from exc


def group_final_sizes(state: ImmunityState, pair: DriftPair, z_overall: float) -> np.ndarray:
    """Per-group attack ratios z_j = 1 - exp(-a_j * z_overall)."""
    return -np.expm1(-exposure_exponents(state, pair) * z_overall)


def step(state: ImmunityState, pair: DriftPair) -> tuple[ImmunityState, SeasonOutcome]:
    """Resolve one season and age the immunity structure by one year.

    Everyone infected this season lands in the freshest slot; survivors of
    each group shift one slot toward no-immunity; drift multiplies every
    carried-over immunity level by (1 - delta).
    """
    r_e = effective_reproduction(state, pair)
    z = solve_overall_final_size(state, pair)
    zg = group_final_sizes(state, pair, z)
    outcome = SeasonOutcome(r_e=r_e, z_groups=zg, z_overall=z)

    p, iota, r = state.p, state.iota, state.r
    p_new = np.empty(r)
    p_new[0] = np.dot(p, zg)
    p_new[1:] = p[:-1] * (1.0 - zg[:-1])
    p_new[-1] += p[-1] * (1.0 - zg[-1])
    s = p_new.sum()
    if abs(s - 1.0) > RENORM_TOL:
        raise StateError(f"stepped state mass {s!r} is too far from 1")
    p_new /= s

    iota_new = np.empty(r)
    iota_new[0] = 1.0
    iota_new[1:] = iota[:-1] * (1.0 - pair.delta)
    iota_new[-1] = 0.0
    return ImmunityState(p_new, iota_new), outcome
