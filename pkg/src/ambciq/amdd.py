"""Decision-directed semi-blind estimation by alternating least squares.

One pass: detect the data block with the pilot estimates, then re-estimate
the AP-backscatter matrices (tag by tag), the LU-backscatter components,
the RSI block, and the direct block, in that order.  Each update treats the
detected symbols as known pilots and fuses the data observations with the
training observations that carry the same unknown, canceling everything
else with the freshest available estimates.

Every normal-equation system has Kronecker structure (small Gram) x I_M, so
updates are solved in matrix form; the full designs are never built.
"""

from __future__ import annotations

import numpy as np

from .detection import DetectedBlock, build_hypothesis_grid, ml_detect
from .errors import NumericalError
from .pilot_estimator import (EstimateSet, estimate_from_matrices,
                              estimate_matrices, pilot_estimate)
from .pilots import PilotPlan
from .synthesis import DataSignals, TrainingSignals, lu_constellation, tag_constellation


def _solve_block(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (G kron I_M) vec(X) = vec(rhs) for the M x n block X."""
    try:
        return np.linalg.solve(G, rhs.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular fused normal equations: {exc}") from exc


def data_regressors(x: np.ndarray, d: np.ndarray, C: np.ndarray) -> dict:
    """Per-block regressor matrices built from (detected) symbols.

    ``X2``: (D, 2) rows [x, x*]; ``Ct``: (D, 2M) rows [c, c*]; per tag
    ``Dt[k]``: (4, D) profile rows for the V block and ``Db[k]``: (4M, D)
    for the U block, both in (bar, check, ddot, dot) order.
    """
    K, D = d.shape
    xc = np.conj(x)
    X2 = np.column_stack([x, xc])
    Dt = np.empty((K, 4, D), dtype=complex)
    Db = np.empty((K, 4 * C.shape[1], D), dtype=complex)
    CT, CcT = C.T, np.conj(C).T
    for k in range(K):
        dk, dkc = d[k], np.conj(d[k])
        Dt[k] = np.stack([x * dk, xc * dkc, xc * dk, x * dkc])
        Db[k] = np.vstack([CT * dk, CcT * dkc, CcT * dk, CT * dkc])
    return {"X2": X2, "Dt": Dt, "Db": Db, "Ct": np.hstack([C, np.conj(C)])}


def _data_model(mats: dict, reg: dict, skip: tuple = ()) -> np.ndarray:
    """Reconstructed data block from the current estimates.

    ``skip`` names component groups ('H', 'Q', 'V', 'U') or single tags
    ('U0', 'U1', ...) left out of the reconstruction.
    """
    K = len(mats["U"])
    D = reg["X2"].shape[0]
    M = mats["H"].shape[0]
    out = np.zeros((M, D), dtype=complex)
    if "H" not in skip:
        out += mats["H"] @ reg["X2"].T
    if "Q" not in skip:
        out += mats["Q"] @ reg["Ct"].T
    if "V" not in skip:
        for k in range(K):
            out += mats["V"][k] @ reg["Dt"][k]
    if "U" not in skip:
        for k in range(K):
            if f"U{k}" in skip:
                continue
            out += mats["U"][k] @ reg["Db"][k]
    return out


def amdd_update_u(k: int, Z: np.ndarray, mats: dict, reg: dict,
                  sig: TrainingSignals, plan: PilotPlan) -> np.ndarray:
    """Fused data + phase-3 re-estimate of tag k's AP-backscatter block."""
    Zu = Z - _data_model(mats, reg, skip=(f"U{k}",))
    Db_k = reg["Db"][k]
    G = Db_k.conj() @ Db_k.T
    rhs = Zu @ Db_k.conj().T
    Rt3 = plan.Rt3()
    for i in (1, 2):
        P3 = plan.P3(i)
        G = G + P3.conj().T @ P3
        resid = sig.Y3[k, i - 1] - mats["Q"] @ Rt3.T
        rhs = rhs + resid @ np.conj(P3)
    return _solve_block(G, rhs)


def amdd_update_v(Z: np.ndarray, mats: dict, reg: dict,
                  sig: TrainingSignals, plan: PilotPlan) -> list:
    """Fused data + phase-2 re-estimate of all LU-backscatter components."""
    K = len(mats["V"])
    Zv = Z - _data_model(mats, reg, skip=("V",))
    Dt_all = reg["Dt"].reshape(4 * K, -1)
    G = Dt_all.conj() @ Dt_all.T
    rhs = Zv @ Dt_all.conj().T
    for i in (1, 2):
        T2f = plan.T2_full(i)
        G = G + T2f.conj().T @ T2f
        resid = sig.Y2(i) - mats["H"] @ plan.S2(i).T
        rhs = rhs + resid @ np.conj(T2f)
    V_all = _solve_block(G, rhs)
    return [V_all[:, 4 * k:4 * k + 4].copy() for k in range(K)]


def amdd_update_q(Z: np.ndarray, mats: dict, reg: dict,
                  sig: TrainingSignals, plan: PilotPlan) -> np.ndarray:
    """Fused data + phase-1 + phase-3 re-estimate of the RSI block."""
    K = len(mats["U"])
    Zq = Z - _data_model(mats, reg, skip=("Q",))
    Ct = reg["Ct"]
    Rt, Rt3 = plan.Rt(), plan.Rt3()
    G = Ct.conj().T @ Ct + Rt.conj().T @ Rt + 2 * K * (Rt3.conj().T @ Rt3)
    rhs = Zq @ np.conj(Ct)
    rhs = rhs + (sig.Y1 - mats["H"] @ plan.S1().T) @ np.conj(Rt)
    for k in range(K):
        for i in (1, 2):
            resid = sig.Y3[k, i - 1] - mats["U"][k] @ plan.P3(i).T
            rhs = rhs + resid @ np.conj(Rt3)
    return _solve_block(G, rhs)


def amdd_update_h(Z: np.ndarray, mats: dict, reg: dict,
                  sig: TrainingSignals, plan: PilotPlan) -> np.ndarray:
    """Fused data + phase-1 + phase-2 re-estimate of the direct block."""
    K = len(mats["V"])
    Zh = Z - _data_model(mats, reg, skip=("H",))
    X2 = reg["X2"]
    S1 = plan.S1()
    G = X2.conj().T @ X2 + S1.conj().T @ S1
    rhs = Zh @ np.conj(X2)
    rhs = rhs + (sig.Y1 - mats["Q"] @ plan.Rt().T) @ np.conj(S1)
    for i in (1, 2):
        S2 = plan.S2(i)
        G = G + S2.conj().T @ S2
        T2f = plan.T2_full(i)
        resid = sig.Y2(i).copy()
        for k in range(K):
            resid -= mats["V"][k] @ T2f[:, 4 * k:4 * k + 4].T
        rhs = rhs + resid @ np.conj(S2)
    return _solve_block(G, rhs)


def amdd_estimate(sig: TrainingSignals, data: DataSignals, plan: PilotPlan,
                  P_x: float, init: EstimateSet | None = None,
                  detected: DetectedBlock | None = None) -> EstimateSet:
    """Full decision-directed pass.

    ``init`` defaults to the pilot estimate; ``detected`` may inject known
    decisions (used by tests to isolate detection errors from estimation).
    Update order: U_1..U_K, V, Q, H, each cancelling with the freshest
    estimates.
    """
    if init is None:
        init = pilot_estimate(sig, plan)
    mats = estimate_matrices(init)
    K = plan.K
    if detected is None:
        grid = build_hypothesis_grid(lu_constellation(P_x), tag_constellation(), K)
        detected = ml_detect(data.Z, mats, grid, data.C)
    reg = data_regressors(detected.x_hat, detected.d_hat, data.C)

    for k in range(K):
        mats["U"][k] = amdd_update_u(k, data.Z, mats, reg, sig, plan)
    mats["V"] = amdd_update_v(data.Z, mats, reg, sig, plan)
    mats["Q"] = amdd_update_q(data.Z, mats, reg, sig, plan)
    mats["H"] = amdd_update_h(data.Z, mats, reg, sig, plan)
    return estimate_from_matrices(mats, plan.M, K, source="amdd")
