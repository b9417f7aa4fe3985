"""Numba-compiled version of the hypothesis-scoring kernel.

Same contract as :mod:`ambciq._kernels_numpy` but fused: no (slots, hyps, M)
temporaries, one pass per (slot, hypothesis) pair.  The kernel is
single-threaded on purpose: the Monte-Carlo harness parallelizes across
trials with worker processes, and thread-level parallelism inside a forked
worker is not fork-safe with the OpenMP threading layer.  Importing this
module requires numba; :mod:`ambciq.backend` guards the import.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def residual_sq(zt, base, A, B, rho):  # pragma: no cover - exercised via backend
    M, D = zt.shape
    H = base.shape[1]
    K = A.shape[0]
    out = np.empty((D, H), dtype=np.float64)
    for n in range(D):
        for h in range(H):
            acc = 0.0
            for m in range(M):
                val = zt[m, n] - base[m, h]
                for k in range(K):
                    val = val - A[k, m, n] * rho[k, h]
                    val = val - B[k, m, n] * np.conj(rho[k, h])
                acc += val.real * val.real + val.imag * val.imag
            out[n, h] = acc
    return out
