#!/usr/bin/env python3
"""Timing comparison of the compiled kernels vs the NumPy fallback.

Run from the repo root:

    python3 benchmarks/bench_backends.py [--quick]

Covers the hot paths: the season loop, batched one-step outcomes, the
outcome-map inversion, and transition-kernel row assembly (the dominant cost
of the stationary solve).
"""

import argparse
import time

import numpy as np

from seasonchain import _kernels_py
from seasonchain._quad import beta_nodes

try:
    from seasonchain import _ckernels
except ImportError:
    _ckernels = None


def bench(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()
    scale = 0.1 if args.quick else 1.0

    rng = np.random.Generator(np.random.Philox(key=[2026, 0]))
    n_seasons = int(20_000 * scale) + 100
    n_batch = int(100_000 * scale) + 100
    deltas = rng.beta(3.0, 7.0, max(n_seasons, n_batch))
    taus = np.exp(0.683 + np.sqrt(0.02) * rng.standard_normal(max(n_seasons, n_batch)))

    x96, w96 = beta_nodes(3.0, 7.0, 96)
    n_grid = int(512 * scale) + 32
    grid = (np.arange(n_grid) + 0.5) / n_grid

    re_b, z_b = _kernels_py.one_step_r2(0.4, deltas[:n_batch], taus[:n_batch])
    pos = z_b > 0

    workloads = [
        (f"run_chain r=2 ({n_seasons} seasons)",
         lambda k: k.run_chain(deltas[:n_seasons], taus[:n_seasons], 2)),
        (f"run_chain r=10 ({n_seasons} seasons)",
         lambda k: k.run_chain(deltas[:n_seasons], taus[:n_seasons], 10)),
        (f"one_step_r2 ({n_batch} draws)",
         lambda k: k.one_step_r2(0.4, deltas[:n_batch], taus[:n_batch])),
        (f"delta_star_batch ({int(pos.sum())} points)",
         lambda k: k.delta_star_batch(0.4, z_b[pos], re_b[pos])),
        (f"transition_row (96 nodes x {n_grid} targets)",
         lambda k: k.transition_row(0.3, grid, x96, w96, 0.683, 0.0,
                                    np.sqrt(0.02))),
    ]

    backends = [("python", _kernels_py)]
    if _ckernels is not None:
        backends.append(("compiled", _ckernels))
    else:
        print("compiled extension not available; timing the fallback only\n")

    width = max(len(name) for name, _ in workloads)
    header = f"{'workload':<{width}}  " + "  ".join(f"{n:>10}" for n, _ in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, work in workloads:
        times = [bench(lambda k=kern: work(k)) for _, kern in backends]
        row = f"{name:<{width}}  " + "  ".join(f"{t * 1e3:>8.1f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0] / times[1]:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
