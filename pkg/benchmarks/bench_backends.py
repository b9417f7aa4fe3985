#!/usr/bin/env python3
"""Time the hypothesis-scoring kernel on both backends.

Covers the two shapes that dominate runtime: the default two-tag detection
problem and the five-tag case where the hypothesis space is 4^6 = 4096.
Run:  python benchmarks/bench_backends.py
"""

import time

import numpy as np

from ambciq import _kernels_numpy

try:
    from ambciq import _kernels_numba
except ImportError:
    _kernels_numba = None


def problem(seed, M, D, K, H):
    rng = np.random.default_rng(seed)

    def cn(shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return (cn((M, D)), cn((M, H)), cn((K, M, D)), cn((K, M, D)),
            np.ascontiguousarray(np.exp(1j * rng.uniform(0, 2 * np.pi, (K, H)))))


def timeit(fn, args, reps):
    fn(*args)  # warm-up (and JIT compile)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps


def main():
    cases = [
        ("detect   K=2 (M=4, D=200,  H=64)", dict(M=4, D=200, K=2, H=64), 200),
        ("ser-block K=2 (M=4, D=2500, H=64)", dict(M=4, D=2500, K=2, H=64), 30),
        ("detect   K=5 (M=4, D=200,  H=4096)", dict(M=4, D=200, K=5, H=4096), 5),
    ]
    print(f"{'case':40s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, shape, reps in cases:
        args = problem(0, **shape)
        t_np = timeit(_kernels_numpy.residual_sq, args, reps)
        if _kernels_numba is None:
            print(f"{name:40s} {t_np * 1e3:9.2f}ms {'n/a':>10s}")
            continue
        t_nb = timeit(_kernels_numba.residual_sq, args, reps)
        print(f"{name:40s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
