"""Three-phase least-squares channel estimation from the training signals.

Phase 1 recovers the direct and RSI components.  Phase 2 cancels the direct
contribution with the phase-1 estimates and recovers, per tag, the sums and
differences of the LU-backscatter components from the two sub-phases; the
half-sum/half-difference recombination then separates the four individual
components.  Phase 3 does the same for the AP-backscatter matrices after
canceling RSI.

All least-squares solves use an orthogonal factorization (``lstsq``); the
Kronecker structure of the models is exploited by solving directly in
matrix form, so the large sparse design matrices are never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import EffectiveChannels, effective_from_matrices, pack_theta
from .errors import NumericalError
from .pilots import PilotPlan
from .synthesis import TrainingSignals


@dataclass(frozen=True)
class EstimateSet:
    """An estimated channel set plus the producing algorithm's name."""

    channels: EffectiveChannels
    source: str

    def theta(self) -> np.ndarray:
        return pack_theta(self.channels)


def _ls_solve(design: np.ndarray, obs_T: np.ndarray) -> np.ndarray:
    """Least-squares coefficients of obs_T ~ design @ coef, surfacing rank loss."""
    coef, _, rank, _ = np.linalg.lstsq(design, obs_T, rcond=None)
    if rank < design.shape[1]:
        raise NumericalError(
            f"pilot design matrix is rank deficient ({rank} < {design.shape[1]})"
        )
    return coef


def estimate_phase1(Y1: np.ndarray, plan: PilotPlan) -> tuple[np.ndarray, np.ndarray]:
    """LS estimate of (H, Q) from phase 1: Y1 = H S1^T + Q Rt^T + noise."""
    design = np.hstack([plan.S1(), plan.Rt()])
    coef = _ls_solve(design, Y1.T)
    theta_mat = coef.T
    return theta_mat[:, :2], theta_mat[:, 2:]


def estimate_phase2(Y2_1: np.ndarray, Y2_2: np.ndarray, H_hat: np.ndarray,
                    plan: PilotPlan) -> dict:
    """Recover the four LU-backscatter components of every tag.

    Sub-phase 1 observes the per-tag aggregates (bar + ddot) and
    (check + dot); sub-phase 2, with the quadrature carrier, observes
    j (bar - ddot) and j (dot - check).  Half sums and differences of the
    two solves separate the four components exactly.
    """
    K = plan.K
    T2 = plan.T2()
    agg1 = _ls_solve(T2, (Y2_1 - H_hat @ plan.S2(1).T).T).T        # M x 2K
    agg2 = _ls_solve(1j * T2, (Y2_2 - H_hat @ plan.S2(2).T).T).T   # M x 2K

    sum_bar, sum_check = agg1[:, :K], agg1[:, K:]
    diff_bar, diff_check = agg2[:, :K], agg2[:, K:]
    v_bar = 0.5 * (sum_bar + diff_bar)
    v_ddot = 0.5 * (sum_bar - diff_bar)
    v_dot = 0.5 * (sum_check + diff_check)
    v_check = 0.5 * (sum_check - diff_check)
    # (K, M) stacking
    return {
        "v_bar": v_bar.T.copy(), "v_check": v_check.T.copy(),
        "v_ddot": v_ddot.T.copy(), "v_dot": v_dot.T.copy(),
    }


def estimate_phase3(Y3: np.ndarray, Q_hat: np.ndarray, plan: PilotPlan) -> dict:
    """Recover the four AP-backscatter matrices of every tag.

    Per tag, sub-stage 1 (tag constant 1) observes the aggregates
    (bar + dot) and (check + ddot); sub-stage 2 (tag constant j) observes
    j (bar - dot) and j (ddot - check).  Half sums and differences of the
    two solves separate the four matrices exactly.
    """
    M, K = plan.M, plan.K
    Rt3 = plan.Rt3()
    U_bar = np.empty((K, M, M), dtype=complex)
    U_check = np.empty_like(U_bar)
    U_ddot = np.empty_like(U_bar)
    U_dot = np.empty_like(U_bar)
    for k in range(K):
        sol1 = _ls_solve(Rt3, (Y3[k, 0] - Q_hat @ Rt3.T).T).T      # M x 2M
        sol2 = _ls_solve(1j * Rt3, (Y3[k, 1] - Q_hat @ Rt3.T).T).T
        sum_bar, sum_check = sol1[:, :M], sol1[:, M:]
        diff_bar, diff_check = sol2[:, :M], sol2[:, M:]
        U_bar[k] = 0.5 * (sum_bar + diff_bar)
        U_dot[k] = 0.5 * (sum_bar - diff_bar)
        U_ddot[k] = 0.5 * (sum_check + diff_check)
        U_check[k] = 0.5 * (sum_check - diff_check)
    return {"U_bar": U_bar, "U_check": U_check, "U_ddot": U_ddot, "U_dot": U_dot}


def pilot_estimate(sig: TrainingSignals, plan: PilotPlan) -> EstimateSet:
    """Run the three phases in order, threading the cancellations."""
    H_hat, Q_hat = estimate_phase1(sig.Y1, plan)
    v_parts = estimate_phase2(sig.Y2_1, sig.Y2_2, H_hat, plan)
    u_parts = estimate_phase3(sig.Y3, Q_hat, plan)
    channels = EffectiveChannels(
        h_bar=H_hat[:, 0].copy(), h_check=H_hat[:, 1].copy(),
        Q_bar=Q_hat[:, :plan.M].copy(), Q_check=Q_hat[:, plan.M:].copy(),
        **v_parts, **u_parts,
    )
    return EstimateSet(channels=channels, source="pilot")


def genie_estimate(eff: EffectiveChannels) -> EstimateSet:
    """Wrap the true channels as an estimate, for benchmark detection."""
    return EstimateSet(channels=eff, source="genie")


def estimate_matrices(est: EstimateSet) -> dict:
    """Mutable matrix-form view {H, Q, V, U} used by the refinement stages."""
    ch = est.channels
    return {
        "H": ch.H(), "Q": ch.Qmat(),
        "V": [ch.Vk(k) for k in range(ch.K)],
        "U": [ch.Uk(k) for k in range(ch.K)],
    }


def estimate_from_matrices(mats: dict, M: int, K: int, source: str) -> EstimateSet:
    """Inverse of :func:`estimate_matrices`."""
    channels = effective_from_matrices(mats["H"], mats["Q"], mats["V"], mats["U"], M, K)
    return EstimateSet(channels=channels, source=source)
