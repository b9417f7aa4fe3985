"""Joint LU/tag hypothesis enumeration and per-slot ML detection.

A joint hypothesis fixes the LU symbol and all K tag symbols for one slot.
Hypotheses are indexed LU-major, tags in order, so index
``((lu * Dbar + d_1) * Dbar + d_2) ...``; ties in the residual metric break
toward the lowest index, which makes detection fully deterministic.

The expensive part, squared residuals over (slot, hypothesis), is routed
through :mod:`ambciq.backend`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend


@dataclass(frozen=True)
class HypothesisGrid:
    """Per-hypothesis symbol values and derived regressor rows.

    ``lu``: (H,) LU symbol per hypothesis; ``rho``: (K, H) tag symbols.
    ``e1``: (H, 2) rows [x, x*]; ``e3``: (H, 4K) rows of per-tag blocks
    [x d, x* d*, x* d, x d*] matching the V-block column order; ``f``:
    (H, 2K) rows of per-tag [d, d*].
    """

    lu_symbols: np.ndarray
    tag_symbols: np.ndarray
    lu: np.ndarray
    rho: np.ndarray

    @property
    def H(self) -> int:
        return self.lu.shape[0]

    @property
    def K(self) -> int:
        return self.rho.shape[0]

    def decode(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map hypothesis indices to (LU symbols, (K, n) tag symbols)."""
        Dbar = self.tag_symbols.size
        K = self.K
        lu_idx = idx // (Dbar ** K)
        x = self.lu_symbols[lu_idx]
        d = np.empty((K, idx.size), dtype=complex)
        rem = idx % (Dbar ** K)
        for k in range(K):
            power = Dbar ** (K - 1 - k)
            d[k] = self.tag_symbols[rem // power]
            rem = rem % power
        return x, d

    def e1(self) -> np.ndarray:
        return np.column_stack([self.lu, np.conj(self.lu)])

    def e3(self) -> np.ndarray:
        cols = []
        for k in range(self.K):
            x, d = self.lu, self.rho[k]
            cols += [x * d, np.conj(x) * np.conj(d), np.conj(x) * d, x * np.conj(d)]
        return np.column_stack(cols)

    def f(self) -> np.ndarray:
        cols = []
        for k in range(self.K):
            cols += [self.rho[k], np.conj(self.rho[k])]
        return np.column_stack(cols)


def build_hypothesis_grid(lu_symbols: np.ndarray, tag_symbols: np.ndarray,
                          K: int) -> HypothesisGrid:
    """Enumerate the S x D^K joint hypothesis grid in canonical order."""
    Sbar, Dbar = lu_symbols.size, tag_symbols.size
    H = Sbar * Dbar ** K
    idx = np.arange(H)
    lu = lu_symbols[idx // (Dbar ** K)]
    rho = np.empty((K, H), dtype=complex)
    rem = idx % (Dbar ** K)
    for k in range(K):
        power = Dbar ** (K - 1 - k)
        rho[k] = tag_symbols[rem // power]
        rem = rem % power
    return HypothesisGrid(lu_symbols=np.asarray(lu_symbols, dtype=complex),
                          tag_symbols=np.asarray(tag_symbols, dtype=complex),
                          lu=lu, rho=rho)


def reconstruction_parts(mats: dict, grid: HypothesisGrid, C: np.ndarray):
    """Factorize the per-(slot, hypothesis) reconstruction.

    Returns ``base`` (M, H) with all slot-independent terms and, per tag,
    the AP-backscatter slot profiles ``A``/``B`` (K, M, D) multiplying the
    tag symbol and its conjugate.
    """
    K = grid.K
    Ct_T = C.T
    Cc_T = np.conj(C).T
    base = mats["H"] @ grid.e1().T
    e3 = grid.e3()
    for k in range(K):
        base = base + mats["V"][k] @ e3[:, 4 * k:4 * k + 4].T
    M = C.shape[1]
    A = np.empty((K, M, C.shape[0]), dtype=complex)
    B = np.empty_like(A)
    for k in range(K):
        Uk = mats["U"][k]
        U_bar, U_check = Uk[:, :M], Uk[:, M:2 * M]
        U_ddot, U_dot = Uk[:, 2 * M:3 * M], Uk[:, 3 * M:]
        A[k] = U_bar @ Ct_T + U_ddot @ Cc_T
        B[k] = U_dot @ Ct_T + U_check @ Cc_T
    return base, A, B


def residual_table(Z: np.ndarray, mats: dict, grid: HypothesisGrid,
                   C: np.ndarray) -> np.ndarray:
    """Squared residual of every (slot, hypothesis) pair, shape (D, H).

    The RSI term rides the known AP symbols only, so it is removed from the
    observations up front rather than enumerated.
    """
    Ct = np.hstack([C, np.conj(C)])
    zt = Z - mats["Q"] @ Ct.T
    base, A, B = reconstruction_parts(mats, grid, C)
    return backend.residual_sq(np.ascontiguousarray(zt), np.ascontiguousarray(base),
                               np.ascontiguousarray(A), np.ascontiguousarray(B),
                               np.ascontiguousarray(grid.rho))


@dataclass(frozen=True)
class DetectedBlock:
    """Hard decisions for one data block."""

    x_hat: np.ndarray      # (D,)
    d_hat: np.ndarray      # (K, D)
    hyp_idx: np.ndarray    # (D,) winning hypothesis per slot

    @property
    def D(self) -> int:
        return self.x_hat.shape[0]


def ml_detect(Z: np.ndarray, mats: dict, grid: HypothesisGrid,
              C: np.ndarray) -> DetectedBlock:
    """Per-slot exhaustive ML detection of the LU and tag symbols.

    ``np.argmin`` returns the first minimizer, which implements the
    lowest-index tie-break.
    """
    scores = residual_table(Z, mats, grid, C)
    idx = np.argmin(scores, axis=1)
    x_hat, d_hat = grid.decode(idx)
    return DetectedBlock(x_hat=x_hat, d_hat=d_hat, hyp_idx=idx)
