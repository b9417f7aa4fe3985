"""Iterative semi-blind estimation with per-slot symbol posteriors.

Each iteration replaces the hard decisions of the decision-directed pass
with exact posterior probabilities over every joint (LU, tags) hypothesis,
slot by slot (expectation step), then updates the parameter blocks one at a
time with the others frozen at their freshest values (conditional
maximization).  Symbols are independent across slots given the channel, so
every expectation a block update needs reduces to posterior-weighted sums
of per-slot regressor products; all second-moment blocks inherit the
(small matrix) x I_M Kronecker structure, and updates are again solved in
matrix form.

The fitted surrogate (expected complete-data objective plus the training
log-likelihood) is exposed for testing: each conditional update maximizes
it exactly over its own block, so it must be non-decreasing through a
sweep at fixed posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detection import (HypothesisGrid, build_hypothesis_grid, residual_table)
from .errors import NumericalError
from .pilot_estimator import (EstimateSet, estimate_from_matrices,
                              estimate_matrices)
from .pilots import PilotPlan
from .synthesis import DataSignals, TrainingSignals, lu_constellation, tag_constellation

# Per-component scalar pattern inside a U-block profile (bar, check, ddot,
# dot): 0 = tag symbol, 1 = its conjugate.  The matching AP-symbol factor is
# C, C*, C*, C.
_PAT = (0, 1, 0, 1)


@dataclass(frozen=True)
class PosteriorTable:
    """Normalized per-slot probabilities over the joint hypothesis grid."""

    probs: np.ndarray          # (D, H)
    grid: HypothesisGrid

    def marginal_lu(self) -> np.ndarray:
        """(D, Sbar) marginal over the LU symbol."""
        Dbar, K = self.grid.tag_symbols.size, self.grid.K
        return self.probs.reshape(self.probs.shape[0], -1, Dbar ** K).sum(axis=2)


def compute_posteriors(Z: np.ndarray, mats: dict, grid: HypothesisGrid,
                       C: np.ndarray, sigma2: float) -> PosteriorTable:
    """Exact per-slot posteriors: softmax of -residual^2 / sigma2.

    Computed in the log domain with per-slot max subtraction.  At zero
    noise the posterior degenerates to a point mass on the best hypothesis.
    """
    scores = residual_table(Z, mats, grid, C)
    if sigma2 <= 0:
        probs = np.zeros_like(scores)
        probs[np.arange(scores.shape[0]), np.argmin(scores, axis=1)] = 1.0
        return PosteriorTable(probs=probs, grid=grid)
    logp = -scores / sigma2
    logp -= logp.max(axis=1, keepdims=True)
    probs = np.exp(logp)
    probs /= probs.sum(axis=1, keepdims=True)
    return PosteriorTable(probs=probs, grid=grid)


@dataclass(frozen=True)
class EStepMoments:
    """All expectations the conditional updates consume.

    ``S..`` matrices are the small Kronecker factors of the second-moment
    blocks (the full blocks are S x I_M): S11 (2x2), S12 (2x2M), S13
    (2x4K), S22 (2Mx2M), S23 (2Mx4K), S33 (4Kx4K), and per tag S1k
    (K,2,4M), S2k (K,2M,4M), S3k (K,4K,4M) plus the tag-pair blocks SO
    (K,K,4M,4M).  ``psi*_z``/``pi_z`` are the expected-regressor images of
    the observations in matrix form; ``E1``/``E3``/``EG`` keep the per-slot
    expected regressor rows; ``z_sq`` is ||Z||^2 for objective evaluation.
    """

    S11: np.ndarray
    S12: np.ndarray
    S13: np.ndarray
    S22: np.ndarray
    S23: np.ndarray
    S33: np.ndarray
    S1k: np.ndarray
    S2k: np.ndarray
    S3k: np.ndarray
    SO: np.ndarray
    E1: np.ndarray
    E3: np.ndarray
    EG: np.ndarray
    psi1_z: np.ndarray
    psi2_z: np.ndarray
    psi3_z: np.ndarray
    pi_z: np.ndarray
    z_sq: float


def _hyp_product_grids(grid: HypothesisGrid):
    """Hypothesis-value grids reused across iterations (and trials)."""
    e1, e3, f = grid.e1(), grid.e3(), grid.f()
    lf = (np.conj(e1)[:, :, None] * f[:, None, :])      # (H, 2, 2K)
    e3f = (np.conj(e3)[:, :, None] * f[:, None, :])     # (H, 4K, 2K)
    ff = (np.conj(f)[:, :, None] * f[:, None, :])       # (H, 2K, 2K)
    return e1, e3, f, lf, e3f, ff


def build_estep_moments(post: PosteriorTable, Z: np.ndarray, C: np.ndarray,
                        grids=None) -> EStepMoments:
    """Reduce the posterior table to every moment the updates need."""
    grid = post.grid
    P = post.probs
    D, H = P.shape
    K = grid.K
    M = C.shape[1]
    if grids is None:
        grids = _hyp_product_grids(grid)
    e1g, e3g, fg, lfg, e3fg, ffg = grids

    Ct = np.hstack([C, np.conj(C)])
    Cc = np.conj(C)
    cfac = (C, Cc, Cc, C)

    # Per-slot first moments of the regressor rows.
    E1 = P @ e1g                                     # (D, 2)
    E3 = P @ e3g                                     # (D, 4K)
    Ef = P @ fg                                      # (D, 2K)

    # Slot-summed conjugate-pair moments of [e1, e3].
    e13 = np.hstack([e1g, e3g])
    w_total = P.sum(axis=0)
    SS = (np.conj(e13) * w_total[:, None]).T @ e13
    S11, S13, S33 = SS[:2, :2], SS[:2, 2:], SS[2:, 2:]

    # Per-slot mixed moments that must be combined with the AP symbols.
    LF = (P @ lfg.reshape(H, -1)).reshape(D, 2, 2 * K)
    E3F = (P @ e3fg.reshape(H, -1)).reshape(D, 4 * K, 2 * K)
    FF = (P @ ffg.reshape(H, -1)).reshape(D, 2 * K, 2 * K)

    S12 = np.conj(E1).T @ Ct
    S22 = np.conj(Ct).T @ Ct
    S23 = np.conj(Ct).T @ E3

    EG = np.empty((K, D, 4 * M), dtype=complex)
    S1k = np.empty((K, 2, 4 * M), dtype=complex)
    S2k = np.empty((K, 2 * M, 4 * M), dtype=complex)
    S3k = np.empty((K, 4 * K, 4 * M), dtype=complex)
    for k in range(K):
        for j in range(4):
            cols = slice(j * M, (j + 1) * M)
            mj = Ef[:, 2 * k + _PAT[j]]
            EG[k][:, cols] = cfac[j] * mj[:, None]
            S1k[k][:, cols] = LF[:, :, 2 * k + _PAT[j]].T @ cfac[j]
            S3k[k][:, cols] = E3F[:, :, 2 * k + _PAT[j]].T @ cfac[j]
            S2k[k][:M, cols] = (Cc * mj[:, None]).T @ cfac[j]
            S2k[k][M:, cols] = (C * mj[:, None]).T @ cfac[j]

    # Tag-pair second moments; the conjugated side's AP factor conjugates too.
    cfac_conj = (Cc, C, C, Cc)
    SO = np.empty((K, K, 4 * M, 4 * M), dtype=complex)
    for k in range(K):
        for l in range(K):
            for i in range(4):
                rows = slice(i * M, (i + 1) * M)
                for j in range(4):
                    cols = slice(j * M, (j + 1) * M)
                    m = FF[:, 2 * k + _PAT[i], 2 * l + _PAT[j]]
                    SO[k, l][rows, cols] = (cfac_conj[i] * m[:, None]).T @ cfac[j]

    pi_z = np.empty((K, M, 4 * M), dtype=complex)
    for k in range(K):
        pi_z[k] = Z @ np.conj(EG[k])

    return EStepMoments(
        S11=S11, S12=S12, S13=S13, S22=S22, S23=S23, S33=S33,
        S1k=S1k, S2k=S2k, S3k=S3k, SO=SO, E1=E1, E3=E3, EG=EG,
        psi1_z=Z @ np.conj(E1), psi2_z=Z @ np.conj(Ct), psi3_z=Z @ np.conj(E3),
        pi_z=pi_z, z_sq=float(np.vdot(Z, Z).real),
    )


def _solve_block(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(G, rhs.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular conditional-update system: {exc}") from exc


def cm_update_u(k: int, mom: EStepMoments, mats: dict,
                sig: TrainingSignals, plan: PilotPlan) -> np.ndarray:
    """Conditional update of tag k's AP-backscatter block."""
    G = mom.SO[k, k].copy()
    rhs = mom.pi_z[k].copy()
    rhs -= mats["H"] @ np.conj(mom.S1k[k])
    rhs -= mats["Q"] @ np.conj(mom.S2k[k])
    rhs -= np.hstack(mats["V"]) @ np.conj(mom.S3k[k])
    for l in range(len(mats["U"])):
        if l != k:
            rhs -= mats["U"][l] @ mom.SO[k, l].T
    Rt3 = plan.Rt3()
    for i in (1, 2):
        P3 = plan.P3(i)
        G += P3.conj().T @ P3
        rhs += (sig.Y3[k, i - 1] - mats["Q"] @ Rt3.T) @ np.conj(P3)
    return _solve_block(G, rhs)


def cm_update_v(mom: EStepMoments, mats: dict,
                sig: TrainingSignals, plan: PilotPlan) -> list:
    """Conditional update of all LU-backscatter components."""
    K = len(mats["V"])
    G = mom.S33.copy()
    rhs = mom.psi3_z.copy()
    rhs -= mats["H"] @ np.conj(mom.S13)
    rhs -= mats["Q"] @ np.conj(mom.S23)
    for k in range(K):
        rhs -= mats["U"][k] @ mom.S3k[k].T
    for i in (1, 2):
        T2f = plan.T2_full(i)
        G += T2f.conj().T @ T2f
        rhs += (sig.Y2(i) - mats["H"] @ plan.S2(i).T) @ np.conj(T2f)
    V_all = _solve_block(G, rhs)
    return [V_all[:, 4 * k:4 * k + 4].copy() for k in range(K)]


def cm_update_q(mom: EStepMoments, mats: dict,
                sig: TrainingSignals, plan: PilotPlan) -> np.ndarray:
    """Conditional update of the RSI block."""
    K = len(mats["U"])
    Rt, Rt3 = plan.Rt(), plan.Rt3()
    G = mom.S22 + Rt.conj().T @ Rt + 2 * K * (Rt3.conj().T @ Rt3)
    rhs = mom.psi2_z.copy()
    rhs -= mats["H"] @ np.conj(mom.S12)
    rhs -= np.hstack(mats["V"]) @ mom.S23.T
    for k in range(K):
        rhs -= mats["U"][k] @ mom.S2k[k].T
    rhs += (sig.Y1 - mats["H"] @ plan.S1().T) @ np.conj(Rt)
    for k in range(K):
        for i in (1, 2):
            rhs += (sig.Y3[k, i - 1] - mats["U"][k] @ plan.P3(i).T) @ np.conj(Rt3)
    return _solve_block(G, rhs)


def cm_update_h(mom: EStepMoments, mats: dict,
                sig: TrainingSignals, plan: PilotPlan) -> np.ndarray:
    """Conditional update of the direct block."""
    K = len(mats["V"])
    S1 = plan.S1()
    G = mom.S11 + S1.conj().T @ S1
    rhs = mom.psi1_z.copy()
    rhs -= mats["Q"] @ mom.S12.T
    rhs -= np.hstack(mats["V"]) @ mom.S13.T
    for k in range(K):
        rhs -= mats["U"][k] @ mom.S1k[k].T
    rhs += (sig.Y1 - mats["Q"] @ plan.Rt().T) @ np.conj(S1)
    for i in (1, 2):
        S2 = plan.S2(i)
        G = G + S2.conj().T @ S2
        T2f = plan.T2_full(i)
        rhs += (sig.Y2(i) - np.hstack(mats["V"]) @ T2f.T) @ np.conj(S2)
    return _solve_block(G, rhs)


def surrogate_objective(mats: dict, mom: EStepMoments,
                        sig: TrainingSignals, plan: PilotPlan,
                        sigma2: float) -> float:
    """Fitted E-step surrogate: training LLF + expected data LLF.

    Up to parameter-independent constants, in units of -1/sigma2.  Each
    conditional update maximizes this exactly over its own block, so it is
    non-decreasing along an update sweep at fixed moments.
    """
    H, Q, V, U = mats["H"], mats["Q"], mats["V"], mats["U"]
    Vmat = np.hstack(V)
    K = len(U)

    r1 = sig.Y1 - H @ plan.S1().T - Q @ plan.Rt().T
    pilot = np.vdot(r1, r1).real
    for i in (1, 2):
        r2 = sig.Y2(i) - H @ plan.S2(i).T - Vmat @ plan.T2_full(i).T
        pilot += np.vdot(r2, r2).real
    Rt3 = plan.Rt3()
    for k in range(K):
        for i in (1, 2):
            r3 = sig.Y3[k, i - 1] - Q @ Rt3.T - U[k] @ plan.P3(i).T
            pilot += np.vdot(r3, r3).real

    def q2(X, S):
        return np.vdot(X, X @ S.T).real

    def cross(A, B, S):
        return np.vdot(A, B @ S.T)

    data = mom.z_sq + q2(H, mom.S11) + q2(Q, mom.S22) + q2(Vmat, mom.S33)
    for k in range(K):
        for l in range(K):
            data += np.vdot(U[k], U[l] @ mom.SO[k, l].T).real
    data -= 2 * np.vdot(mom.psi1_z, H).real
    data -= 2 * np.vdot(mom.psi2_z, Q).real
    data -= 2 * np.vdot(mom.psi3_z, Vmat).real
    for k in range(K):
        data -= 2 * np.vdot(mom.pi_z[k], U[k]).real
    data += 2 * cross(H, Q, mom.S12).real
    data += 2 * cross(H, Vmat, mom.S13).real
    data += 2 * cross(Q, Vmat, mom.S23).real
    for k in range(K):
        data += 2 * cross(H, U[k], mom.S1k[k]).real
        data += 2 * cross(Q, U[k], mom.S2k[k]).real
        data += 2 * cross(Vmat, U[k], mom.S3k[k]).real

    if sigma2 <= 0:
        return -(pilot + data)
    return -(pilot + data) / sigma2


def ecm_estimate(sig: TrainingSignals, data: DataSignals, plan: PilotPlan,
                 init: EstimateSet, iters: int, sigma2: float, P_x: float,
                 return_trace: bool = False):
    """Run `iters` full iterations from the given initial estimate.

    With ``return_trace`` the per-iteration estimate sets are returned as
    well (index 0 = init), which the harness uses for iteration profiles.
    """
    K = plan.K
    grid = build_hypothesis_grid(lu_constellation(P_x), tag_constellation(), K)
    grids = _hyp_product_grids(grid)
    mats = estimate_matrices(init)
    trace = [init]
    for _ in range(iters):
        post = compute_posteriors(data.Z, mats, grid, data.C, sigma2)
        mom = build_estep_moments(post, data.Z, data.C, grids=grids)
        for k in range(K):
            mats["U"][k] = cm_update_u(k, mom, mats, sig, plan)
        mats["V"] = cm_update_v(mom, mats, sig, plan)
        mats["Q"] = cm_update_q(mom, mats, sig, plan)
        mats["H"] = cm_update_h(mom, mats, sig, plan)
        if return_trace:
            trace.append(estimate_from_matrices(mats, plan.M, K, source="ecm"))
    result = estimate_from_matrices(mats, plan.M, K, source="ecm")
    if return_trace:
        return result, trace
    return result
