import numpy as np
import pytest

from seasonchain.distributions import preset
from seasonchain.model import ModelConfig
from seasonchain.simulate import run_chain, stationary_samples

CASES = ("case1", "case2", "case3", "case4")
CHAIN_SEED = 2026
CHAIN_SEASONS = 20_000


@pytest.fixture(scope="session")
def chains():
    """Lazy, session-wide cache of long chain runs keyed by (case, r)."""
    cache = {}

    def get(case: str, r: int):
        key = (case, r)
        if key not in cache:
            cache[key] = run_chain(ModelConfig(r), preset(case), CHAIN_SEED,
                                   CHAIN_SEASONS)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def samples(chains):
    """Post-burn-in stationary samples for (case, r)."""
    def get(case: str, r: int):
        return stationary_samples(chains(case, r))

    return get


@pytest.fixture(scope="session")
def preset_draws():
    """10^5 (delta, tau) draws per preset case, fixed seed."""
    cache = {}

    def get(case: str, n: int = 100_000, seed: int = 777):
        key = (case, n, seed)
        if key not in cache:
            rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
            cache[key] = preset(case).sample_arrays(rng, n)
        return cache[key]

    return get
