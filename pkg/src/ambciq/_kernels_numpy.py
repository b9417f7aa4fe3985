"""Pure-numpy reference implementation of the hypothesis-scoring kernel.

This is the hot inner loop of both hard detection and posterior evaluation:
for every slot and every joint (LU symbol, tag symbols) hypothesis, the
squared residual between the observed vector and the reconstructed signal.
The reconstruction is factorized as

    recon[:, n, h] = base[:, h] + sum_k A[k, :, n] rho[k, h]
                                + sum_k B[k, :, n] conj(rho[k, h])

where ``base`` collects every slot-independent term (direct channel and
LU-backscatter components) and A/B carry the AP-backscatter terms that ride
the slot-varying AP symbols.
"""

from __future__ import annotations

import numpy as np

# Cap on complex temporaries (entries) when expanding (slots, hyps, M).
_CHUNK_ENTRIES = 2_000_000


def residual_sq(zt: np.ndarray, base: np.ndarray, A: np.ndarray,
                B: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Squared residual norms, shape (D, H).

    ``zt``: (M, D) observations with slot-static interference removed;
    ``base``: (M, H); ``A``/``B``: (K, M, D); ``rho``: (K, H).
    """
    M, D = zt.shape
    H = base.shape[1]
    K = A.shape[0]
    out = np.empty((D, H), dtype=np.float64)
    rho_c = np.conj(rho)
    chunk = max(1, _CHUNK_ENTRIES // max(H * M, 1))
    for lo in range(0, D, chunk):
        hi = min(D, lo + chunk)
        r = zt[:, lo:hi].T[:, None, :] - base.T[None, :, :]      # (n, h, m)
        for k in range(K):
            r = r - A[k, :, lo:hi].T[:, None, :] * rho[k][None, :, None]
            r = r - B[k, :, lo:hi].T[:, None, :] * rho_c[k][None, :, None]
        out[lo:hi] = np.einsum("nhm,nhm->nh", r, r.conj()).real
    return out
