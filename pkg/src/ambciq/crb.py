"""Estimation-error lower bounds for the pilot-based and semi-blind cases.

The training observations are linear in the flat parameter vector, so the
pilot bound is built from the stacked observation operator A: rows for
phase 1, both phase-2 sub-phases, and all 2K phase-3 sub-stages; each block
is the corresponding regressor expanded by Kronecker with I_M.  The
complex Fisher information is A^H A / sigma2 with zero pseudo-part (the
noise is circular), and the bound on the total squared error is the trace
of the inverse real-parameter information matrix.

The semi-blind (modified) bound adds the expected data-block information:
with zero-mean proper unit-modulus tag symbols and zero-mean proper LU
symbols of power P_x, the cross-blocks average to zero and each diagonal
block has a closed form; only the AP-backscatter block depends on the
realized AP symbols.
"""

from __future__ import annotations

import numpy as np

from .channels import block_slices, theta_length
from .errors import NumericalError
from .pilots import PilotPlan
from .synthesis import QPSK


def stacked_pilot_operator(plan: PilotPlan) -> np.ndarray:
    """The full training-observation operator mapping theta to all pilots.

    Shape (M (N1 + 2 N2 + 2 K N3), Lbar).  Dense and small at desk scale.
    """
    M, K = plan.M, plan.K
    Lbar = theta_length(M, K)
    sl = block_slices(M, K)
    I_M = np.eye(M)

    rows = []

    def block_row(total_cols_slices):
        n_rows = total_cols_slices[0][0].shape[0] * M
        row = np.zeros((n_rows, Lbar), dtype=complex)
        for small, col_slice in total_cols_slices:
            row[:, col_slice] = np.kron(small, I_M)
        return row

    # Phase 1: direct + RSI.
    rows.append(block_row([(plan.S1(), sl["h"]), (plan.Rt(), sl["q"])]))
    # Phase 2, both sub-phases: direct + LU backscatter.
    for i in (1, 2):
        rows.append(block_row([(plan.S2(i), sl["h"]), (plan.T2_full(i), sl["v"])]))
    # Phase 3, 2K sub-stages: RSI + one tag's AP backscatter.
    u_start = sl["u"].start
    for k in range(K):
        for i in (1, 2):
            u_slice = slice(u_start + k * 4 * M * M, u_start + (k + 1) * 4 * M * M)
            rows.append(block_row([(plan.Rt3(), sl["q"]), (plan.P3(i), u_slice)]))
    return np.vstack(rows)


def real_fim_from_complex(B: np.ndarray, sigma2: float) -> np.ndarray:
    """Real-parameter information for [Re theta; Im theta].

    ``B`` is the complex information Gram (A^H A plus any added data
    information); with zero pseudo-information the transform gives
    (2 / sigma2) [[Re B, -Im B], [Im B, Re B]].
    """
    ReB, ImB = B.real, B.imag
    top = np.hstack([ReB, -ImB])
    bot = np.hstack([ImB, ReB])
    return (2.0 / sigma2) * np.vstack([top, bot])


def _trace_inverse(J: np.ndarray, M: int, K: int) -> float:
    """tr(J^-1) via Cholesky, diagnosing the deficient block on failure."""
    try:
        L = np.linalg.cholesky(J)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(_describe_deficiency(J, M, K)) from exc
    inv_L = np.linalg.solve(L, np.eye(J.shape[0]))
    return float(np.sum(inv_L * inv_L))


def _describe_deficiency(J: np.ndarray, M: int, K: int) -> str:
    Lbar = theta_length(M, K)
    sl = block_slices(M, K)
    report = []
    for name in ("h", "q", "v", "u"):
        s = sl[name]
        idx = np.r_[np.arange(s.start, s.stop), Lbar + np.arange(s.start, s.stop)]
        sub = J[np.ix_(idx, idx)]
        eig = np.linalg.eigvalsh(sub)
        report.append(f"{name}: min eig {eig[0]:.3e}")
    return "information matrix is not positive definite (" + "; ".join(report) + ")"


def pilot_crb(plan: PilotPlan, sigma2: float) -> float:
    """Total-MSE lower bound for estimation from the training phases alone.

    Scales linearly in the noise power; zero noise gives a zero bound.
    """
    if sigma2 <= 0:
        return 0.0
    A = stacked_pilot_operator(plan)
    B = A.conj().T @ A
    J = real_fim_from_complex(B, sigma2)
    return _trace_inverse(J, plan.M, plan.K)


def data_information(C: np.ndarray, D: int, P_x: float, M: int, K: int) -> np.ndarray:
    """Expected data-block information Gram (complex domain, unscaled).

    Block diagonal over [h; q; v; u]: D P_x I for the direct block, the
    known-AP-symbol Gram for the RSI block, D P_x I for the LU-backscatter
    block, and per tag the AP-symbol fourth-pattern Gram expanded by I_M.
    Requires zero-mean proper constellations (E d = 0, E d^2 = 0); BPSK
    tags violate that and are rejected.
    """
    tag = QPSK
    if not (abs(np.mean(tag)) < 1e-12 and abs(np.mean(tag ** 2)) < 1e-12):
        raise ValueError("tag constellation must be zero-mean and proper "
                         "(E d = 0 and E d^2 = 0); BPSK is not supported")
    Lbar = theta_length(M, K)
    sl = block_slices(M, K)
    T = np.zeros((Lbar, Lbar), dtype=complex)
    T[sl["h"], sl["h"]] = D * P_x * np.eye(2 * M)
    Ct = np.hstack([C, np.conj(C)])
    T[sl["q"], sl["q"]] = np.kron(Ct.conj().T @ Ct, np.eye(M))
    T[sl["v"], sl["v"]] = D * P_x * np.eye(4 * K * M)

    ChC = C.conj().T @ C
    ChCc = C.conj().T @ np.conj(C)
    CtC = C.T @ C
    CtCc = C.T @ np.conj(C)
    Z = np.zeros((M, M), dtype=complex)
    # (bar, check, ddot, dot) pattern Gram of the per-slot AP profiles.
    Ccheck = np.block([
        [ChC, Z, ChCc, Z],
        [Z, CtCc, Z, CtC],
        [CtC, Z, CtCc, Z],
        [Z, ChCc, Z, ChC],
    ])
    u_block = np.kron(Ccheck, np.eye(M))
    u_start = sl["u"].start
    for k in range(K):
        s = slice(u_start + k * 4 * M * M, u_start + (k + 1) * 4 * M * M)
        T[s, s] = u_block
    return T


def semiblind_crb(plan: PilotPlan, C: np.ndarray, D: int, P_x: float,
                  sigma2: float) -> float:
    """Total-MSE lower bound when the D-slot data block is also exploited."""
    if sigma2 <= 0:
        return 0.0
    A = stacked_pilot_operator(plan)
    B = A.conj().T @ A
    if D > 0:
        B = B + data_information(C, D, P_x, plan.M, plan.K)
    J = real_fim_from_complex(B, sigma2)
    return _trace_inverse(J, plan.M, plan.K)
