"""Multi-season epidemic chains with random immunity drift and transmissibility.

Library layout:

* :mod:`seasonchain.model` - season dynamics for arbitrary immunity memory r;
* :mod:`seasonchain.distributions` - joint laws of one season's (drift,
  transmissibility) pair, including the four bundled preset scenarios;
* :mod:`seasonchain.analytic` - closed forms for the r = 2 chain (outcome
  densities, transition kernel, forecasts);
* :mod:`seasonchain.stationary` - the long-run r = 2 law and laws mixed
  over it;
* :mod:`seasonchain.simulate` - the Monte Carlo engine (any r), kernel
  density smoothing, support diagnostics;
* :mod:`seasonchain.cli` - the ``seasonchain`` command.

Numerical hot loops run in a compiled extension when available and fall back
to NumPy otherwise; :func:`backend_name` reports which one is active.
"""

from ._backend import backend_name
from .distributions import CASE_NAMES, PRESETS, PairDistribution, preset
from .errors import (ConvergenceError, RegionError, SeasonChainError,
                     SolverError, StateError)
from .model import (DriftPair, ImmunityState, ModelConfig, SeasonOutcome,
                    effective_reproduction, group_final_sizes, naive_state,
                    solve_overall_final_size, step)

__version__ = "0.1.0"

__all__ = [
    "CASE_NAMES", "PRESETS", "PairDistribution", "preset",
    "DriftPair", "ImmunityState", "ModelConfig", "SeasonOutcome",
    "naive_state", "effective_reproduction", "solve_overall_final_size",
    "group_final_sizes", "step",
    "SeasonChainError", "SolverError", "RegionError", "ConvergenceError",
    "StateError",
    "backend_name", "__version__",
]
