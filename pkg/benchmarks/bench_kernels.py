#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure NumPy fallback.

Times the per-image hot path of feature extraction (omega-stack sampling plus
invariant sums) and the end-to-end extraction of a small synthetic dataset,
once per available backend.

Usage: python benchmarks/bench_kernels.py [--images 60] [--size 128]
"""

import argparse
import time

import numpy as np

import se2n
from se2n import descriptors, imagecore


def time_call(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--images", type=int, default=60)
    parser.add_argument("--size", type=int, default=128)
    args = parser.parse_args()

    samples = imagecore.synth_dataset(4, args.images // 4, args.size, seed=0)
    config = descriptors.DescriptorConfig(kinds=("PS", "RPS", "BS", "RBS"))
    grid = descriptors.grid_for(samples[0].raster, config)
    spec = descriptors.spectrum_for(samples[0].raster, config)
    stack = descriptors.omega_stack(spec, grid)
    orbit = grid.orbit_freqs()

    backends = se2n.available_backends()
    print(f"backends: {', '.join(backends)};  grid: {grid.n_points} points, {grid.n_pairs} pairs")
    header = f"{'benchmark':<34}" + "".join(f"{b:>12}" for b in backends)
    print(header)
    print("-" * len(header))

    rows = {
        "omega stack (bilinear sampling)": lambda: descriptors.omega_stack(spec, grid),
        "invariant sums (all four kinds)": lambda: descriptors.features_from_stack(
            stack, grid, config, ("PS", "RPS", "BS", "RBS")
        ),
        "single-image extraction": lambda: descriptors.extract_many(
            samples[0].raster, grid, config
        ),
    }
    rows[f"{len(samples)}-image dataset (1 thread)"] = lambda: descriptors.extract_dataset(
        samples, grid, config, threads=1
    )
    results = {}
    for name, fn in rows.items():
        repeats = 2 if "dataset" in name else 5
        results[name] = []
        for backend in backends:
            se2n.set_backend(backend)
            results[name].append(time_call(fn, repeats))
        print(f"{name:<34}" + "".join(f"{t * 1e3:>10.2f}ms" for t in results[name]))

    se2n.set_backend("auto")
    if len(backends) == 2:
        print()
        for name in rows:
            speedup = results[name][0] / results[name][1]
            print(f"native speedup, {name}: {speedup:.2f}x")


if __name__ == "__main__":
    main()
