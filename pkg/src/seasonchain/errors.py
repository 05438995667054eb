"""Exception types shared across the package."""


class SeasonChainError(Exception):
    """Base class for all package-specific errors."""


class SolverError(SeasonChainError):
    """A root finder failed to converge within its iteration cap."""


class RegionError(SeasonChainError, ValueError):
    """A (z, R_e) query lies outside the reachable region for the given prior.

    The message names the inequality that failed so callers can tell whether
    the point sits below the lower curve or above the upper curve.
    """


class ConvergenceError(SeasonChainError):
    """Fixed-point iteration for the stationary law did not converge."""


class StateError(SeasonChainError, ValueError):
    """An immunity state violates its invariants beyond repairable round-off."""
