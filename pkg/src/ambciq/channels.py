"""Physical channel generation and the effective-channel parameterization.

The physical layer has three kinds of links: the direct LU->AP vector, the
cascaded LU->tag->AP vectors, and the cascaded AP->tag->AP matrices, plus a
residual self-interference (RSI) matrix at the full-duplex AP.  TX and RX
I/Q imbalance mix every link with its complex conjugate, so each physical
quantity fans out into several effective quantities.  The naming convention,
fixed once here and used everywhere else, keys each effective component to
the (symbol, tag-symbol) conjugation pattern it multiplies in the received
signal:

    ==========  ==================  ====================
    suffix      direct/RSI factor   backscatter factor
    ==========  ==================  ====================
    bar         s        (or r)     s * t      (r * t)
    check       s*       (r*)       s* * t*    (r* * t*)
    ddot        --                  s* * t     (r* * t)
    dot         --                  s  * t*    (r  * t*)
    ==========  ==================  ====================

Estimators recover the effective components; ``pack_theta``/``unpack_theta``
define the canonical flat parameter ordering shared with the bounds.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, SystemConfig


def pathloss(d: float, cfg: SystemConfig) -> float:
    """Reference-distance pathloss: (lambda / 4 pi d_o)^2 * (d_o / d)^gamma."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    lam = SPEED_OF_LIGHT / cfg.f_c
    return (lam / (4.0 * np.pi * cfg.d_o)) ** 2 * (cfg.d_o / d) ** cfg.gamma


@dataclass(frozen=True)
class IQParams:
    """TX (G1, G2) and RX (K1, K2) imbalance coefficients.

    Perfect balance (g = 1, phi = 0) gives G1 = K1 = 1 and G2 = K2 = 0,
    collapsing every mirror component to zero.
    """

    G1: complex
    G2: complex
    K1: complex
    K2: complex

    @classmethod
    def from_mismatch(cls, g_T: float, phi_T: float, g_R: float, phi_R: float) -> "IQParams":
        G1 = (1.0 + g_T * cmath.exp(1j * phi_T)) / 2.0
        G2 = (1.0 - g_T * cmath.exp(-1j * phi_T)) / 2.0
        K1 = (1.0 + g_R * cmath.exp(1j * phi_R)) / 2.0
        K2 = (1.0 - g_R * cmath.exp(-1j * phi_R)) / 2.0
        return cls(G1, G2, K1, K2)

    @property
    def noise_scale(self) -> float:
        """Variance inflation of the post-RX-imbalance noise: |K1|^2 + |K2|^2."""
        return abs(self.K1) ** 2 + abs(self.K2) ** 2


@dataclass(frozen=True)
class PhysicalChannels:
    """One realization of the fading channels, before any I/Q effects.

    ``a``: (M,) LU->AP small-scale fading; ``f``: (K,) LU->tag scalars;
    ``g``: (K, M) tag->AP vectors; ``Q_o``: (M, M) RSI matrix.  The derived
    quantities fold in pathloss and reflection coefficients:
    ``h_o = sqrt(L(d_R)) a``, ``v = sqrt(L(d_k) L(d_bar_k)) eta f g`` and
    ``U = L(d_k) eta g g^T`` (rank one, symmetric).
    """

    a: np.ndarray
    f: np.ndarray
    g: np.ndarray
    Q_o: np.ndarray
    h_o: np.ndarray
    v: np.ndarray   # (K, M)
    U: np.ndarray   # (K, M, M)


def _nakagami_entries(rng: np.random.Generator, m: float, shape) -> np.ndarray:
    """Unit mean-square Nakagami-m amplitudes with i.i.d. uniform phase."""
    amp = np.sqrt(rng.gamma(shape=m, scale=1.0 / m, size=shape))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    return amp * np.exp(1j * phase)


def complex_normal(rng: np.random.Generator, var: float, shape) -> np.ndarray:
    """Circular complex Gaussian entries with E|x|^2 = var."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channels(cfg: SystemConfig, rng: np.random.Generator) -> PhysicalChannels:
    """Draw one realization of all physical channels.

    Small-scale fading entries have Nakagami-m amplitude normalized to unit
    mean-square power, so the pathloss carries all large-scale scaling; RSI
    entries are circular Gaussian with variance ``sigma_i_sq``.  Draw order
    (a, f, g, Q_o) is fixed for reproducibility.
    """
    M, K = cfg.M, cfg.K
    a = _nakagami_entries(rng, cfg.m_nakagami, (M,))
    f = _nakagami_entries(rng, cfg.m_nakagami, (K,))
    g = _nakagami_entries(rng, cfg.m_nakagami, (K, M))
    Q_o = complex_normal(rng, cfg.sigma_i_sq, (M, M))

    h_o = np.sqrt(pathloss(cfg.d_R, cfg)) * a
    v = np.empty((K, M), dtype=complex)
    U = np.empty((K, M, M), dtype=complex)
    for k in range(K):
        L_k = pathloss(cfg.d_k[k], cfg)
        L_bar = pathloss(cfg.d_bar_k[k], cfg)
        v[k] = np.sqrt(L_k * L_bar) * cfg.eta[k] * f[k] * g[k]
        U[k] = L_k * cfg.eta[k] * np.outer(g[k], g[k])
    return PhysicalChannels(a=a, f=f, g=g, Q_o=Q_o, h_o=h_o, v=v, U=U)


@dataclass(frozen=True)
class EffectiveChannels:
    """The 4 + 8K effective quantities actually seen by the estimators.

    Direct/RSI: ``h_bar``, ``h_check`` (M,) and ``Q_bar``, ``Q_check`` (M, M).
    Per tag (stacked along axis 0): ``v_*`` are (K, M) and ``U_*`` (K, M, M),
    with the bar/check/ddot/dot suffixes defined in the module docstring.
    """

    h_bar: np.ndarray
    h_check: np.ndarray
    Q_bar: np.ndarray
    Q_check: np.ndarray
    v_bar: np.ndarray
    v_check: np.ndarray
    v_ddot: np.ndarray
    v_dot: np.ndarray
    U_bar: np.ndarray
    U_check: np.ndarray
    U_ddot: np.ndarray
    U_dot: np.ndarray

    @property
    def M(self) -> int:
        return self.h_bar.shape[0]

    @property
    def K(self) -> int:
        return self.v_bar.shape[0]

    # --- matrix views used by the estimators ------------------------------
    def H(self) -> np.ndarray:
        """M x 2 block [h_bar, h_check]."""
        return np.column_stack([self.h_bar, self.h_check])

    def Qmat(self) -> np.ndarray:
        """M x 2M block [Q_bar, Q_check]."""
        return np.hstack([self.Q_bar, self.Q_check])

    def Vk(self, k: int) -> np.ndarray:
        """M x 4 block [v_bar, v_check, v_ddot, v_dot] for tag k."""
        return np.column_stack([self.v_bar[k], self.v_check[k], self.v_ddot[k], self.v_dot[k]])

    def Vmat(self) -> np.ndarray:
        """M x 4K block [V_1 ... V_K]."""
        return np.hstack([self.Vk(k) for k in range(self.K)])

    def Uk(self, k: int) -> np.ndarray:
        """M x 4M block [U_bar, U_check, U_ddot, U_dot] for tag k."""
        return np.hstack([self.U_bar[k], self.U_check[k], self.U_ddot[k], self.U_dot[k]])


def derive_effective(phys: PhysicalChannels, iq: IQParams) -> EffectiveChannels:
    """Combine fading and I/Q coefficients into the effective channels."""
    G1, G2, K1, K2 = iq.G1, iq.G2, iq.K1, iq.K2
    return EffectiveChannels(
        h_bar=K1 * G1 * phys.h_o + K2 * np.conj(G2) * np.conj(phys.h_o),
        h_check=K1 * G2 * phys.h_o + K2 * np.conj(G1) * np.conj(phys.h_o),
        Q_bar=K1 * G1 * phys.Q_o + K2 * np.conj(G2) * np.conj(phys.Q_o),
        Q_check=K1 * G2 * phys.Q_o + K2 * np.conj(G1) * np.conj(phys.Q_o),
        v_bar=K1 * G1 * phys.v,
        v_check=K2 * np.conj(G1) * np.conj(phys.v),
        v_ddot=K1 * G2 * phys.v,
        v_dot=K2 * np.conj(G2) * np.conj(phys.v),
        U_bar=K1 * G1 * phys.U,
        U_check=K2 * np.conj(G1) * np.conj(phys.U),
        U_ddot=K1 * G2 * phys.U,
        U_dot=K2 * np.conj(G2) * np.conj(phys.U),
    )


def theta_length(M: int, K: int) -> int:
    """Length of the flat parameter vector: 2M + 2M^2 + 4KM + 4KM^2."""
    return 2 * M + 2 * M * M + 4 * K * M + 4 * K * M * M


def _vec(A: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return A.reshape(-1, order="F")


def pack_theta(eff: EffectiveChannels) -> np.ndarray:
    """Flatten to theta = [h; q; v; u] with column-major vec of each block.

    h = vec([h_bar h_check]), q = vec([Q_bar Q_check]), v stacks vec(V_k)
    and u stacks vec(U_k) in tag order, with V_k/U_k column order
    (bar, check, ddot, dot).
    """
    parts = [_vec(eff.H()), _vec(eff.Qmat())]
    parts += [_vec(eff.Vk(k)) for k in range(eff.K)]
    parts += [_vec(eff.Uk(k)) for k in range(eff.K)]
    return np.concatenate(parts)


def unpack_theta(theta: np.ndarray, M: int, K: int) -> EffectiveChannels:
    """Inverse of :func:`pack_theta`."""
    expected = theta_length(M, K)
    if theta.shape != (expected,):
        raise ValueError(f"theta must have shape ({expected},), got {theta.shape}")
    pos = 0

    def take(rows, cols):
        nonlocal pos
        block = theta[pos:pos + rows * cols].reshape(rows, cols, order="F")
        pos += rows * cols
        return block

    H = take(M, 2)
    Q = take(M, 2 * M)
    V = [take(M, 4) for _ in range(K)]
    U = [take(M, 4 * M) for _ in range(K)]
    return EffectiveChannels(
        h_bar=H[:, 0].copy(),
        h_check=H[:, 1].copy(),
        Q_bar=Q[:, :M].copy(),
        Q_check=Q[:, M:].copy(),
        v_bar=np.stack([V[k][:, 0] for k in range(K)]),
        v_check=np.stack([V[k][:, 1] for k in range(K)]),
        v_ddot=np.stack([V[k][:, 2] for k in range(K)]),
        v_dot=np.stack([V[k][:, 3] for k in range(K)]),
        U_bar=np.stack([U[k][:, 0 * M:1 * M] for k in range(K)]),
        U_check=np.stack([U[k][:, 1 * M:2 * M] for k in range(K)]),
        U_ddot=np.stack([U[k][:, 2 * M:3 * M] for k in range(K)]),
        U_dot=np.stack([U[k][:, 3 * M:4 * M] for k in range(K)]),
    )


def block_slices(M: int, K: int) -> dict:
    """Index ranges of the h/q/v/u blocks inside theta."""
    n_h = 2 * M
    n_q = 2 * M * M
    n_v = 4 * K * M
    n_u = 4 * K * M * M
    out = {
        "h": slice(0, n_h),
        "q": slice(n_h, n_h + n_q),
        "v": slice(n_h + n_q, n_h + n_q + n_v),
        "u": slice(n_h + n_q + n_v, n_h + n_q + n_v + n_u),
    }
    return out


def effective_from_matrices(H, Q, V, U, M: int, K: int) -> EffectiveChannels:
    """Rebuild an EffectiveChannels from the H / Q / [V_k] / [U_k] blocks."""
    return EffectiveChannels(
        h_bar=H[:, 0].copy(),
        h_check=H[:, 1].copy(),
        Q_bar=Q[:, :M].copy(),
        Q_check=Q[:, M:].copy(),
        v_bar=np.stack([V[k][:, 0] for k in range(K)]),
        v_check=np.stack([V[k][:, 1] for k in range(K)]),
        v_ddot=np.stack([V[k][:, 2] for k in range(K)]),
        v_dot=np.stack([V[k][:, 3] for k in range(K)]),
        U_bar=np.stack([U[k][:, 0 * M:1 * M] for k in range(K)]),
        U_check=np.stack([U[k][:, 1 * M:2 * M] for k in range(K)]),
        U_ddot=np.stack([U[k][:, 2 * M:3 * M] for k in range(K)]),
        U_dot=np.stack([U[k][:, 3 * M:4 * M] for k in range(K)]),
    )
