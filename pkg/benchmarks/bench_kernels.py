#!/usr/bin/env python3
"""Time the jitted kernels against the pure-numpy reference path.

Run: python benchmarks/bench_kernels.py [--repeats N]

The same kernels are selected at import time by QDIFFRACT_NUMBA; this
script calls both implementations directly so one process covers both.
"""

import argparse
import time

import numpy as np

from qdiffract import _kernels

if not _kernels.USE_NUMBA:
    raise SystemExit("run without QDIFFRACT_NUMBA=0: the benchmark needs "
                     "both backends importable")


def best_of(func, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    n = 513  # grid side at half-extent 256
    dk = 2 * np.pi
    axis = dk * np.arange(-256, 257, dtype=np.float64)
    kx, ky = np.meshgrid(axis, axis, indexing="ij")
    widths = np.array([0.05, 0.05])
    heights = np.array([1.0, 1.0])
    cxs = np.array([-0.1, 0.1])
    cys = np.zeros(2)

    factors = rng.normal(0, 1, (4, n * n)) + 1j * rng.normal(0, 1, (4, n * n))
    coeffs = rng.normal(0, 1, (4, 4)) + 1j * rng.normal(0, 1, (4, 4))
    coeffs = coeffs @ coeffs.conj().T
    values = rng.normal(0, 1, (n, n)) + 1j * rng.normal(0, 1, (n, n))

    cases = [
        ("rect_union_factor (513^2 grid, 2 slits)",
         lambda: _kernels.rect_union_factor_numba(
             kx, ky, widths, heights, cxs, cys, 1.0),
         lambda: _kernels.rect_union_factor_numpy(
             kx, ky, widths, heights, cxs, cys, 1.0)),
        ("pattern_quadratic (4 modes x 513^2)",
         lambda: _kernels.pattern_quadratic_numba(factors, coeffs),
         lambda: _kernels.pattern_quadratic_numpy(factors, coeffs)),
        ("abs2_sum (513^2)",
         lambda: _kernels.abs2_sum_numba(values),
         lambda: _kernels.abs2_sum_numpy(values)),
    ]

    print(f"{'kernel':45s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, jitted, reference in cases:
        jitted()  # compile outside the timed region
        t_jit = best_of(jitted, args.repeats)
        t_np = best_of(reference, args.repeats)
        print(f"{name:45s} {t_jit * 1e3:9.2f}ms {t_np * 1e3:9.2f}ms "
              f"{t_np / t_jit:7.2f}x")


if __name__ == "__main__":
    main()
