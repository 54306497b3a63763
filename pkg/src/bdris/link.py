"""Precoders and link metrics (received power, sum rate)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidConfigError, RankError
from .model import GroupingStrategy, ScatteringBlocks, assemble_scattering

ZF_MAX_COND = 1e10
LN2 = np.log(2.0)


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """Precoding vectors stacked as the columns of an ``(M, K)`` array."""

    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        if W.ndim == 1:
            W = W[:, None]
        object.__setattr__(self, "W", W)

    @property
    def K(self) -> int:
        return self.W.shape[1]

    def __getitem__(self, k) -> np.ndarray:
        return self.W[:, k]

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.W) ** 2))


def mrt_precoder(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex).ravel()
    nrm = np.linalg.norm(h)
    if nrm == 0.0:
        raise DegenerateInputError("MRT precoder of a zero channel")
    return h.conj() / nrm


def zf_precoders(H) -> PrecoderSet:
    """Zero-forcing directions ``H^H (H H^H)^-1`` with ``||w_k||^2 = 1/K`` each."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    K, M = H.shape
    if K > M:
        raise InvalidConfigError(f"zero forcing needs K <= M (K={K}, M={M})")
    s = np.linalg.svd(H, compute_uv=False)
    if s[-1] == 0.0 or s[0] / s[-1] > ZF_MAX_COND:
        raise RankError(
            f"channel is rank deficient: smallest singular value {s[-1]:.3e} "
            f"(largest {s[0]:.3e})", singular_value=float(s[-1]))
    P = np.linalg.pinv(H)
    P /= np.linalg.norm(P, axis=0) * np.sqrt(K)
    return PrecoderSet(P)


def received_power(h, w, P_T: float) -> float:
    """``P_T |h w|^2``."""
    w = np.asarray(w, dtype=complex).ravel()
    if np.linalg.norm(w) > 1 + 1e-10:
        raise InvalidConfigError("precoder norm exceeds 1")
    return float(P_T * abs(np.dot(np.asarray(h, dtype=complex).ravel(), w)) ** 2)


def sum_rate(H, p: PrecoderSet, P_T: float, sigma_z2: float, bits: bool = False) -> float:
    """Sum over users of ``log(1 + SINR_k)``; nats unless ``bits``.

    ``SINR_k = P_T |h_k w_k|^2 / (sum_{i != k} P_T |h_k w_i|^2 + sigma_z2)``.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    W = p.W if isinstance(p, PrecoderSet) else PrecoderSet(p).W
    if H.shape[0] != W.shape[1] or H.shape[1] != W.shape[0]:
        raise InvalidConfigError(f"shape mismatch H {H.shape}, W {W.shape}")
    G = P_T * np.abs(H @ W) ** 2
    signal = np.diag(G)
    interference = G.sum(axis=1) - signal
    rate = float(np.sum(np.log1p(signal / (interference + sigma_z2))))
    return rate / LN2 if bits else rate


def effective_channel(s: GroupingStrategy, t: ScatteringBlocks, H_R, H_T) -> np.ndarray:
    """``H_R Theta H_T`` evaluated in grouped coordinates (``K x M``)."""
    perm = np.asarray(s.perm)
    H_R = np.atleast_2d(H_R)
    G, n = s.G, s.group_size
    R = H_R[:, perm].reshape(-1, G, n)
    T = np.asarray(H_T)[perm, :].reshape(G, n, -1)
    return np.einsum("kgn,gnj,gjm->km", R, t.blocks, T)


def effective_channel_direct(s: GroupingStrategy, t: ScatteringBlocks, H_R, H_T) -> np.ndarray:
    """Same as :func:`effective_channel` through the full ``N x N`` matrix."""
    return np.atleast_2d(H_R) @ assemble_scattering(s, t) @ np.asarray(H_T)
