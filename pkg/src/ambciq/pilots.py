"""DFT-based pilot design for the three training phases.

Every training sequence is a column of a unitary DFT matrix, chosen so that
each sequence, its conjugate, and all other sequences (and conjugates) are
mutually orthogonal.  Conjugating a DFT column gives another DFT column
(index N - k), so the selection must avoid the two real columns (0 and N/2)
and never pick both members of a conjugate pair; that costs half the
columns and produces the feasibility bounds N1 >= 2M+4, N2 >= 2K+2 and
N3 >= 2M+2.

Scaling convention: LU and AP pilot symbols carry power P_T each (columns
scaled by sqrt(N * P_T)); tag sequences are rescaled to unit modulus since
tags are passive phase-shift reflectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


class PilotCapacityError(ValueError):
    """A pilot length is too short for the requested number of sequences."""


def dft_matrix(N: int) -> np.ndarray:
    """Unitary N-point DFT matrix, entry (i, j) = exp(-2 pi i j / N) / sqrt(N)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    idx = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / N) / np.sqrt(N)


def select_pilot_columns(N: int, count: int) -> list[int]:
    """Pick `count` DFT column indices avoiding real columns and conjugate pairs.

    Columns 0 and N/2 are real-valued; column N-k is the conjugate of column
    k.  The lowest eligible indices 1..count satisfy both constraints
    whenever (N-2)/2 >= count, and are returned in ascending order so the
    plan is deterministic.
    """
    if N % 2 != 0:
        raise ValueError("pilot DFT size must be even")
    if (N - 2) // 2 < count:
        raise PilotCapacityError(
            f"DFT size {N} supports at most {(N - 2) // 2} conjugate-free "
            f"sequences; need {count} (requires N >= {2 * count + 2})"
        )
    return list(range(1, count + 1))


@dataclass(frozen=True)
class PilotPlan:
    """Concrete training sequences for all three phases.

    Phase 1: LU sends ``s1`` while the AP sends the columns of ``R``; all
    tags absorb.  Phase 2: the AP is silent, the LU sends ``s2_1`` (then
    ``s2_2``), and tag k sends ``t[k]`` in both sub-phases.  Phase 3 runs K
    stages of two sub-stages; in stage k only tag k is active, reflecting
    the constants ``tag3`` while the AP sends the columns of ``R3`` and the
    LU is silent.
    """

    s1: np.ndarray          # (N1,)
    R: np.ndarray           # (N1, M)
    t: np.ndarray           # (K, N2), unit modulus
    s2_1: np.ndarray        # (N2,)
    s2_2: np.ndarray        # (N2,)
    R3: np.ndarray          # (N3, M)
    tag3: tuple             # per-sub-stage tag reflection constants (1, j)
    P_T: float
    s1_col: int
    r_cols: tuple
    t_cols: tuple
    r3_cols: tuple

    @property
    def N1(self) -> int:
        return self.s1.shape[0]

    @property
    def N2(self) -> int:
        return self.t.shape[1]

    @property
    def N3(self) -> int:
        return self.R3.shape[0]

    @property
    def M(self) -> int:
        return self.R.shape[1]

    @property
    def K(self) -> int:
        return self.t.shape[0]

    @property
    def n_total(self) -> int:
        """Total training slots: N1 + 2 N2 + 2 K N3."""
        return self.N1 + 2 * self.N2 + 2 * self.K * self.N3

    # --- stacked regressor blocks shared by the estimators and the bounds --
    def S1(self) -> np.ndarray:
        """N1 x 2 block [s1, s1*]."""
        return np.column_stack([self.s1, np.conj(self.s1)])

    def Rt(self) -> np.ndarray:
        """N1 x 2M block [R, R*]."""
        return np.hstack([self.R, np.conj(self.R)])

    def S2(self, i: int) -> np.ndarray:
        """N2 x 2 block [s2, s2*] for sub-phase i (1-based)."""
        s2 = self.s2_1 if i == 1 else self.s2_2
        return np.column_stack([s2, np.conj(s2)])

    def T2(self) -> np.ndarray:
        """N2 x 2K aggregate-channel regressor sqrt(P_T) [t_1..t_K, t_1*..t_K*].

        The sqrt(P_T) factor is the LU phase-2 carrier amplitude riding on
        every tag reflection.
        """
        amp = np.sqrt(self.P_T)
        return amp * np.hstack([self.t.T, np.conj(self.t.T)])

    def T2_full(self, i: int) -> np.ndarray:
        """N2 x 4K per-component regressor for sub-phase i (1-based).

        Column order per tag matches the V_k block order (bar, check, ddot,
        dot): in sub-phase 1 the carrier is real so bar/ddot ride t_k and
        check/dot ride t_k*; in sub-phase 2 the carrier is imaginary and the
        conjugated-carrier components (check, ddot) flip sign.
        """
        amp = np.sqrt(self.P_T)
        blocks = []
        for k in range(self.K):
            tk = self.t[k]
            tkc = np.conj(tk)
            if i == 1:
                blocks.append(amp * np.column_stack([tk, tkc, tk, tkc]))
            else:
                blocks.append(amp * np.column_stack([1j * tk, -1j * tkc, -1j * tk, 1j * tkc]))
        return np.hstack(blocks)

    def Rt3(self) -> np.ndarray:
        """N3 x 2M block [R3, R3*]."""
        return np.hstack([self.R3, np.conj(self.R3)])

    def P3(self, i: int) -> np.ndarray:
        """N3 x 4M per-component regressor for sub-stage i (1-based).

        Column order matches the U_k block order (bar, check, ddot, dot):
        with tag constant 1 all four ride [R3, R3*, R3*, R3]; with tag
        constant j the conjugated-tag components (check, dot) flip sign.
        """
        R3, R3c = self.R3, np.conj(self.R3)
        if i == 1:
            return np.hstack([R3, R3c, R3c, R3])
        return np.hstack([1j * R3, -1j * R3c, 1j * R3c, -1j * R3])

    def to_json(self) -> str:
        """Compact description (indices + scales), for golden-file tests."""
        return json.dumps(
            {
                "N1": self.N1, "N2": self.N2, "N3": self.N3,
                "M": self.M, "K": self.K,
                "s1_col": self.s1_col,
                "r_cols": list(self.r_cols),
                "t_cols": list(self.t_cols),
                "r3_cols": list(self.r3_cols),
                "lu_ap_symbol_power": self.P_T,
                "tag_modulus": 1.0,
                "n_total": self.n_total,
            },
            sort_keys=True,
        )


def build_pilot_plan(cfg: SystemConfig) -> PilotPlan:
    """Construct the deterministic pilot plan for a configuration.

    Raises :class:`PilotCapacityError` when any pilot length violates its
    feasibility bound.
    """
    M, K = cfg.M, cfg.K
    cols1 = select_pilot_columns(cfg.N1, M + 1)
    cols2 = select_pilot_columns(cfg.N2, K)
    cols3 = select_pilot_columns(cfg.N3, M)

    F1 = dft_matrix(cfg.N1)
    F2 = dft_matrix(cfg.N2)
    F3 = dft_matrix(cfg.N3)

    amp1 = np.sqrt(cfg.N1 * cfg.P_T)   # unit-norm columns -> P_T per symbol
    amp3 = np.sqrt(cfg.N3 * cfg.P_T)
    s1 = amp1 * F1[:, cols1[0]]
    R = amp1 * F1[:, cols1[1:]]
    t = np.sqrt(cfg.N2) * F2[:, cols2].T          # unit modulus tag pilots
    s2_1 = np.sqrt(cfg.P_T) * np.ones(cfg.N2, dtype=complex)
    s2_2 = 1j * s2_1
    R3 = amp3 * F3[:, cols3]

    return PilotPlan(
        s1=s1, R=R, t=t, s2_1=s2_1, s2_2=s2_2, R3=R3, tag3=(1.0 + 0j, 1j),
        P_T=cfg.P_T, s1_col=cols1[0], r_cols=tuple(cols1[1:]),
        t_cols=tuple(cols2), r3_cols=tuple(cols3),
    )
