"""Received-signal synthesis for training phases and data blocks.

Two independent computational paths produce the same received samples: the
physical path applies TX imbalance to the transmitted symbols, propagates
through the raw channels, adds noise, then applies RX imbalance; the
effective path evaluates the effective-channel expansion directly.  Their
agreement (to machine precision) is the main guard against sign or
conjugation mistakes, so neither path is ever expressed in terms of the
other.

Noise convention: circular AWGN of variance sigma^2 enters before the RX
imbalance, so the noise actually seen is w~ = K1 w + K2 w*, with second
moment (|K1|^2 + |K2|^2) sigma^2 per entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channels import EffectiveChannels, IQParams, PhysicalChannels, complex_normal
from .config import SystemConfig
from .pilots import PilotPlan

# Gray-ordered unit-power QPSK constellation.
QPSK = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)


def lu_constellation(P_x: float) -> np.ndarray:
    """LU data constellation at symbol power P_x."""
    return np.sqrt(P_x) * QPSK


def tag_constellation() -> np.ndarray:
    """Tag reflection constellation (unit modulus by construction)."""
    return QPSK.copy()


def apply_iq(z: np.ndarray, c1: complex, c2: complex) -> np.ndarray:
    """Imbalance mixing: c1 * z + c2 * conj(z), element-wise."""
    return c1 * np.asarray(z) + c2 * np.conj(z)


def synthesize_slot_physical(phys: PhysicalChannels, iq: IQParams, s, r, t, w) -> np.ndarray:
    """One received slot through the raw-channel chain.

    ``s``: LU symbol, ``r``: (M,) AP vector, ``t``: (K,) tag symbols,
    ``w``: (M,) circular noise injected before the RX imbalance.
    """
    s_t = apply_iq(s, iq.G1, iq.G2)
    r_t = apply_iq(np.asarray(r, dtype=complex), iq.G1, iq.G2)
    y = phys.h_o * s_t + phys.Q_o @ r_t
    for k in range(phys.v.shape[0]):
        y = y + phys.v[k] * (s_t * t[k]) + t[k] * (phys.U[k] @ r_t)
    y = y + w
    return apply_iq(y, iq.K1, iq.K2)


def synthesize_slot_effective(eff: EffectiveChannels, s, r, t, w_t) -> np.ndarray:
    """One received slot from the effective-channel expansion.

    ``w_t`` is the post-RX-imbalance noise.  Every component multiplies its
    conjugation pattern: bar (s t), check (s* t*), ddot (s* t), dot (s t*),
    and likewise with r for the U terms.
    """
    s = complex(s)
    r = np.asarray(r, dtype=complex)
    rc = np.conj(r)
    y = eff.h_bar * s + eff.h_check * np.conj(s) + eff.Q_bar @ r + eff.Q_check @ rc
    for k in range(eff.K):
        tk = complex(t[k])
        tkc = np.conj(tk)
        y = y + (eff.v_bar[k] * (s * tk) + eff.v_check[k] * (np.conj(s) * tkc)
                 + eff.v_ddot[k] * (np.conj(s) * tk) + eff.v_dot[k] * (s * tkc))
        y = y + (eff.U_bar[k] @ r * tk + eff.U_check[k] @ rc * tkc
                 + eff.U_ddot[k] @ rc * tk + eff.U_dot[k] @ r * tkc)
    return y + np.asarray(w_t, dtype=complex)


@dataclass(frozen=True)
class TrainingSignals:
    """Received matrices for all training slots (noise included).

    ``Y1``: (M, N1); ``Y2_1``/``Y2_2``: (M, N2); ``Y3``: (K, 2, M, N3)
    indexed by (tag stage, sub-stage).
    """

    Y1: np.ndarray
    Y2_1: np.ndarray
    Y2_2: np.ndarray
    Y3: np.ndarray

    def Y2(self, i: int) -> np.ndarray:
        return self.Y2_1 if i == 1 else self.Y2_2


@dataclass(frozen=True)
class DataSignals:
    """Received data block plus the symbols that produced it.

    ``Z``: (M, D) received; ``X``: (D,) LU symbols; ``C``: (D, M) AP
    symbols; ``d``: (K, D) unit-modulus tag symbols.
    """

    Z: np.ndarray
    X: np.ndarray
    C: np.ndarray
    d: np.ndarray

    @property
    def D(self) -> int:
        return self.X.shape[0]

    def Ct(self) -> np.ndarray:
        """D x 2M block [C, C*]."""
        return np.hstack([self.C, np.conj(self.C)])


def dump_complex_array(path, arr: np.ndarray) -> None:
    """Debug dump: raw little-endian float64, interleaved (re, im), C order.

    The shape goes into a ``<path>.json`` sidecar so the file round-trips.
    """
    data = np.ascontiguousarray(arr, dtype=np.complex128)
    interleaved = data.view(np.float64).astype("<f8", copy=False)
    interleaved.tofile(path)
    with open(f"{path}.json", "w") as fh:
        json.dump({"shape": list(data.shape), "layout": "little-endian float64 "
                   "interleaved re/im, row-major"}, fh)


def load_complex_array(path) -> np.ndarray:
    """Read back a :func:`dump_complex_array` file."""
    with open(f"{path}.json") as fh:
        shape = tuple(json.load(fh)["shape"])
    flat = np.fromfile(path, dtype="<f8")
    return flat.view(np.complex128).reshape(shape)


def _rx_noise(cfg: SystemConfig, iq: IQParams, rng: np.random.Generator, shape) -> np.ndarray:
    """Post-RX-imbalance noise: draw circular w, then mix with (K1, K2)."""
    w = complex_normal(rng, cfg.sigma_sq, shape)
    return apply_iq(w, iq.K1, iq.K2)


def _block_effective(eff: EffectiveChannels, S, R, T, W) -> np.ndarray:
    """Vectorized effective synthesis of N slots.

    ``S``: (N,) LU symbols, ``R``: (N, M) AP symbols, ``T``: (K, N) tag
    symbols, ``W``: (M, N) post-imbalance noise.  Identical slot-for-slot to
    :func:`synthesize_slot_effective`.
    """
    Sc, Rc, Tc = np.conj(S), np.conj(R), np.conj(T)
    Y = (np.outer(eff.h_bar, S) + np.outer(eff.h_check, Sc)
         + eff.Q_bar @ R.T + eff.Q_check @ Rc.T)
    for k in range(eff.K):
        Y = Y + (np.outer(eff.v_bar[k], S * T[k]) + np.outer(eff.v_check[k], Sc * Tc[k])
                 + np.outer(eff.v_ddot[k], Sc * T[k]) + np.outer(eff.v_dot[k], S * Tc[k]))
        Y = Y + ((eff.U_bar[k] @ R.T) * T[k] + (eff.U_check[k] @ Rc.T) * Tc[k]
                 + (eff.U_ddot[k] @ Rc.T) * T[k] + (eff.U_dot[k] @ R.T) * Tc[k])
    return Y + W


def synth_training(cfg: SystemConfig, eff: EffectiveChannels, iq: IQParams,
                   plan: PilotPlan, rng: np.random.Generator) -> TrainingSignals:
    """Synthesize all training-phase observations.

    Phase 1: tags absorb.  Phase 2: AP silent, tags reflect their pilot
    sequences under both LU carriers.  Phase 3: LU silent, one tag active
    per stage reflecting the constants (1, j).  Noise matrices are drawn in
    phase order so results are reproducible for a given generator state.
    """
    M, K = cfg.M, cfg.K
    zeros_tags = np.zeros((K, plan.N1), dtype=complex)
    W1 = _rx_noise(cfg, iq, rng, (M, plan.N1))
    Y1 = _block_effective(eff, plan.s1, plan.R, zeros_tags, W1)

    R_silent = np.zeros((plan.N2, M), dtype=complex)
    W2a = _rx_noise(cfg, iq, rng, (M, plan.N2))
    Y2_1 = _block_effective(eff, plan.s2_1, R_silent, plan.t, W2a)
    W2b = _rx_noise(cfg, iq, rng, (M, plan.N2))
    Y2_2 = _block_effective(eff, plan.s2_2, R_silent, plan.t, W2b)

    s_silent = np.zeros(plan.N3, dtype=complex)
    Y3 = np.empty((K, 2, M, plan.N3), dtype=complex)
    for k in range(K):
        for i, tag_const in enumerate(plan.tag3):
            T = np.zeros((K, plan.N3), dtype=complex)
            T[k, :] = tag_const
            W3 = _rx_noise(cfg, iq, rng, (M, plan.N3))
            Y3[k, i] = _block_effective(eff, s_silent, plan.R3, T, W3)
    return TrainingSignals(Y1=Y1, Y2_1=Y2_1, Y2_2=Y2_2, Y3=Y3)


def synth_data(cfg: SystemConfig, eff: EffectiveChannels, iq: IQParams,
               rng: np.random.Generator, D: int | None = None) -> DataSignals:
    """Synthesize a D-slot data block with QPSK LU/AP/tag symbols.

    Draw order: X, C, d, then noise.  LU and AP symbols carry power P_x
    (= P_T); tag symbols are unit modulus.
    """
    M, K = cfg.M, cfg.K
    D = cfg.D if D is None else D
    lu = lu_constellation(cfg.P_x)
    tags = tag_constellation()
    X = lu[rng.integers(0, lu.size, size=D)]
    C = np.sqrt(cfg.P_x) * QPSK[rng.integers(0, 4, size=(D, M))]
    d = tags[rng.integers(0, tags.size, size=(K, D))]
    W = _rx_noise(cfg, iq, rng, (M, D))
    Z = _block_effective(eff, X, C, d, W)
    return DataSignals(Z=Z, X=X, C=C, d=d)
