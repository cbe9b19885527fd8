"""Per-kernel timing: jitted backend vs pure-numpy fallback.

Imports both kernel modules directly, so the CASTSEL_BACKEND selection is
bypassed and one process measures both. The jitted side is warmed before
timing (first call pays compilation). Reports the best of `--repeats` runs
per kernel and the resulting speedup.

Usage: python3 benchmarks/bench_kernels.py [--repeats 5] [--scale 1.0]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from castsel.backend import kernels_np

try:
    from castsel.backend import kernels_nb
except ImportError:
    kernels_nb = None


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(scale: float):
    rng = np.random.default_rng(0)
    n = int(2000 * scale)
    d = 32
    x = rng.standard_normal((n, d))
    a = rng.standard_normal((int(1000 * scale), d))
    b = rng.standard_normal((int(1000 * scale), d))
    m = int(200_000 * scale)
    ii = rng.integers(0, n, m)
    jj = rng.integers(0, n, m)
    k = 15

    dist = np.sort(rng.uniform(0.1, 2.0, (n, k)), axis=1)
    rho = dist[:, 0]

    return [
        ("knn_scan", f"n={n} d={d} k={k}", lambda mod: mod.knn_scan(x, k)),
        (
            "solve_sigma_batch",
            f"n={n} k={k}",
            lambda mod: mod.solve_sigma_batch(dist, rho, np.log2(k)),
        ),
        ("pairwise_sq", f"{a.shape[0]}x{b.shape[0]} d={d}", lambda mod: mod.pairwise_sq(a, b)),
        ("pair_sq", f"m={m} d={d}", lambda mod: mod.pair_sq(x, ii, jj)),
        (
            "farthest_points",
            f"n={n} size={int(300 * scale)}",
            lambda mod: mod.farthest_points(x, int(300 * scale), 0),
        ),
    ]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    args = ap.parse_args()

    cases = build_cases(args.scale)
    if kernels_nb is None:
        print("numba backend unavailable; timing the numpy fallback only")

    header = f"{'kernel':<18} {'size':<22} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, size, call in cases:
        if kernels_nb is not None:
            call(kernels_nb)  # compile before timing
            t_nb = _time(lambda: call(kernels_nb), args.repeats)
        t_np = _time(lambda: call(kernels_np), args.repeats)
        if kernels_nb is None:
            print(f"{name:<18} {size:<22} {t_np * 1e3:>8.2f}ms {'-':>10} {'-':>8}")
        else:
            print(
                f"{name:<18} {size:<22} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms"
                f" {t_np / t_nb:>7.2f}x"
            )


if __name__ == "__main__":
    main()
