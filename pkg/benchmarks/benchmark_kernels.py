"""Benchmark the day-likelihood kernel backends and a full panel fit.

Usage:
    python3 benchmarks/benchmark_kernels.py [--k 20] [--evals 20000]

Compares the compiled (numba) kernel against the vectorized numpy
fallback on a realistic day slice, then times fit_panel on one simulated
default-scenario replicate with whichever backend is active (set
COUNTYRT_NUMBA=0 before running to benchmark the numpy path end to end).
"""

import argparse
import time

import numpy as np

from countyrt import SimConfig, fit_panel, simulate
from countyrt.kernels import BACKEND, negloglik_jit, negloglik_numpy
from countyrt.simulator import default_generation_time


def time_kernel(fn, counts, phi, evals):
    fn(counts, phi, 4.0, 0.25, 0.2)  # warm up (JIT compile / cache load)
    t0 = time.perf_counter()
    for _ in range(evals):
        fn(counts, phi, 4.0, 0.25, 0.2)
    return (time.perf_counter() - t0) / evals


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--k", type=int, default=20, help="grid side (K = k^2 regions)")
    parser.add_argument("--evals", type=int, default=20000, help="kernel calls to time")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    n = args.k * args.k
    phi = np.ascontiguousarray(rng.uniform(0.0, 30.0, size=n))
    counts = np.ascontiguousarray(rng.poisson(phi).astype(np.float64))

    print(f"day-likelihood kernel, K={n} regions, {args.evals} evaluations each")
    t_np = time_kernel(negloglik_numpy, counts, phi, args.evals)
    print(f"  numpy : {t_np * 1e6:8.1f} us/call")
    if negloglik_jit is not None:
        t_jit = time_kernel(negloglik_jit, counts, phi, args.evals)
        print(f"  numba : {t_jit * 1e6:8.1f} us/call  ({t_np / t_jit:.1f}x speedup)")
    else:
        print("  numba : unavailable (COUNTYRT_NUMBA=0 or numba not importable)")

    print(f"\nfull fit_panel on one simulated replicate (backend: {BACKEND})")
    sim = simulate(SimConfig(k=args.k, seed=args.seed))
    w = default_generation_time()
    t0 = time.perf_counter()
    fits = fit_panel(sim.panel, w)
    elapsed = time.perf_counter() - t0
    fitted = sum(1 for f in fits if not f.skipped)
    print(f"  {fitted} days fitted in {elapsed:.2f}s ({elapsed / fitted * 1e3:.1f} ms/day)")


if __name__ == "__main__":
    main()
