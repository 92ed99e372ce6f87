"""Benchmark the hot resampling kernels: JIT path vs pure-NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--size 256] [--reps 20]
"""

import argparse
import time

import numpy as np

from groupaugment.resample import HAS_NUMBA, conv_separable, warmup, warp_bicubic


def time_call(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=256, help="square image edge length")
    parser.add_argument("--reps", type=int, default=20, help="repetitions (best time wins)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    img = rng.random((args.size, args.size, 3))
    map_y, map_x = np.meshgrid(
        np.linspace(0, args.size - 1, args.size),
        np.linspace(0, args.size - 1, args.size),
        indexing="ij",
    )
    map_x = map_x + 0.3 * np.sin(map_y / 7.0)
    map_y = map_y + 0.3 * np.cos(map_x / 9.0)
    taps = np.exp(-0.5 * (np.arange(-3, 4) / 1.5) ** 2)
    taps /= taps.sum()

    warmup()  # exclude JIT compilation from the measurements
    cases = [
        ("warp_bicubic", lambda use: warp_bicubic(img, map_x, map_y, use_numba=use)),
        ("conv_separable", lambda use: conv_separable(img, taps, use_numba=use)),
    ]
    print(f"image {args.size}x{args.size}, best of {args.reps} reps, numba available: {HAS_NUMBA}")
    print(f"{'kernel':<16} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")
    for name, call in cases:
        t_np = time_call(lambda: call(False), args.reps)
        if HAS_NUMBA:
            t_nb = time_call(lambda: call(True), args.reps)
            print(f"{name:<16} {t_np * 1e3:>12.3f} {t_nb * 1e3:>12.3f} {t_np / t_nb:>8.1f}x")
        else:
            print(f"{name:<16} {t_np * 1e3:>12.3f} {'n/a':>12} {'n/a':>9}")


if __name__ == "__main__":
    main()
