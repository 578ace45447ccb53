"""Time the numba kernels against the pure-numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--n 3000000] [--repeats 5]

The two paths are required to be bit-identical (tests/test_kernels.py); this
script only reports speed. Run with THERMALQKD_NUMBA=0 to confirm the
package still works without the fast path.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from thermalqkd import kernels


def _best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_channel_combine(n, repeats, rng):
    src_re = rng.normal(size=n)
    src_im = rng.normal(size=n)
    theta = rng.normal(size=n) * 0.01
    args = (src_re, src_im, 0.7, 23, np.cos(theta), np.sin(theta),
            np.array([3, 7, 19], dtype=np.int64),
            np.array([0.03, -0.02, 0.01]), np.array([0.01, 0.02, -0.01]),
            rng.normal(size=n), rng.normal(size=n))
    return args


def bench_demod_fold(n, repeats, rng):
    angle = rng.uniform(-np.pi, np.pi, n)
    return (rng.normal(size=n), rng.normal(size=n), np.cos(angle), np.sin(angle))


def bench_distill_scan(n, repeats, rng):
    a = rng.integers(0, 2, n, dtype=np.uint8)
    b = a ^ (rng.random(n) < 0.11).astype(np.uint8)
    r = rng.integers(0, 2, n // 2, dtype=np.uint8)
    return (a, b, r, 2)


CASES = [
    ("channel_combine", bench_channel_combine,
     kernels.channel_combine_np, "_channel_combine_nb"),
    ("demod_fold", bench_demod_fold, kernels.demod_fold_np, "_demod_fold_nb"),
    ("distill_scan", bench_distill_scan, kernels.distill_scan_np, "_distill_scan_nb"),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=3_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"n = {args.n:,}, best of {args.repeats}")
    if not kernels.NUMBA_AVAILABLE:
        print("numba unavailable or disabled via THERMALQKD_NUMBA=0; "
              "timing the numpy path only")
    header = f"{'kernel':<18} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, make_args, np_fn, nb_attr in CASES:
        call_args = make_args(args.n, args.repeats, rng)
        t_np = _best_of(lambda: np_fn(*call_args), args.repeats)
        if kernels.NUMBA_AVAILABLE:
            nb_fn = getattr(kernels, nb_attr)
            nb_fn(*call_args)  # compile outside the timed region
            t_nb = _best_of(lambda: nb_fn(*call_args), args.repeats)
            print(f"{name:<18} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
                  f"{t_np / t_nb:>8.2f}x")
        else:
            print(f"{name:<18} {t_np * 1e3:>12.2f} {'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
