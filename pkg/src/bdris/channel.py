"""Correlated Rayleigh channels for the RIS-aided MISO link.

The RIS is a UPA whose element ``n`` (0-based) sits at horizontal index
``n // N_V`` and vertical index ``n % N_V``, so the spatial covariance is
``R_RIS = R_H kron R_V``.  The transmitter-to-RIS channel ``H_T`` (N x M)
follows the Kronecker MIMO model::

    cov(H_T[n, m], H_T[n', m']) = L_T * R_RIS[n, n'] * R_TX[m, m']

i.e. the row-major stacking of ``H_T`` has covariance ``L_T * R_RIS kron R_TX``.

Every draw uses its own Philox stream derived from
``SeedSequence([seed, realization, stream])`` with ``stream = 0`` for ``H_T``
and ``stream = k + 1`` for user ``k``.  Realizations are therefore identical
regardless of how many are drawn or in which order.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError, NumericalError
from .model import SystemConfig

FACTOR_RTOL = 1e-8
DEFAULT_TRAINING_SIZE = 100
DEFAULT_EVAL_REALIZATIONS = 500


def exponential_corr(n: int, rho: float) -> np.ndarray:
    """Exponential correlation matrix ``[R]_ij = rho^|i-j|``."""
    if n < 1:
        raise InvalidConfigError("n must be >= 1")
    if not 0 <= rho < 1:
        raise InvalidConfigError(f"rho={rho} outside [0, 1)")
    idx = np.arange(n)
    return np.power(float(rho), np.abs(idx[:, None] - idx[None, :]))


def ris_covariance(N_H: int, N_V: int, rho: float) -> np.ndarray:
    return np.kron(exponential_corr(N_H, rho), exponential_corr(N_V, rho))


def path_loss(d: float, alpha: float, L0: float = 1e-3) -> float:
    """Distance-dependent path loss ``L0 * d^-alpha`` (linear)."""
    if not d > 0:
        raise InvalidConfigError(f"distance must be positive, got {d}")
    return L0 * d ** (-alpha)


def covariance_factor(R: np.ndarray) -> np.ndarray:
    """Return ``F`` with ``F F^H = R`` via an eigendecomposition.

    Negative eigenvalues from round-off are clipped to zero.  Raises
    :class:`NumericalError` if the reconstruction misses ``R`` by more than
    ``FACTOR_RTOL`` in relative Frobenius norm.
    """
    R = np.asarray(R)
    lam, Q = np.linalg.eigh(R)
    F = Q * np.sqrt(np.clip(lam, 0.0, None))
    err = np.linalg.norm(F @ F.conj().T - R) / max(np.linalg.norm(R), np.finfo(float).tiny)
    if not err <= FACTOR_RTOL:
        lo, hi = lam.min(), lam.max()
        cond = np.inf if lo <= 0 else hi / lo
        raise NumericalError(
            f"covariance factorization error {err:.2e} exceeds {FACTOR_RTOL:.0e} "
            f"(eigenvalues in [{lo:.3e}, {hi:.3e}], condition {cond:.3e})")
    return F


@dataclass(frozen=True)
class CorrelationSpec:
    R_RIS: np.ndarray
    R_TX: np.ndarray
    L_R: float
    L_T: float

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "CorrelationSpec":
        return cls(
            R_RIS=ris_covariance(cfg.N_H, cfg.N_V, cfg.rho),
            R_TX=exponential_corr(cfg.M, cfg.rho),
            L_R=path_loss(cfg.d_R, cfg.alpha_R, cfg.L0),
            L_T=path_loss(cfg.d_T, cfg.alpha_T, cfg.L0),
        )

    @property
    def R_T(self) -> np.ndarray:
        """Covariance of the row-major stacking of ``H_T``."""
        return np.kron(self.R_RIS, self.R_TX)

    @property
    def N(self) -> int:
        return self.R_RIS.shape[0]

    @property
    def M(self) -> int:
        return self.R_TX.shape[0]


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One draw: ``H_T`` (N x M) and ``H_R`` (K x N, row k is user k)."""

    H_T: np.ndarray
    H_R: np.ndarray

    def __post_init__(self):
        H_T = np.asarray(self.H_T, dtype=complex)
        H_R = np.atleast_2d(np.asarray(self.H_R, dtype=complex))
        if H_T.ndim != 2 or H_R.shape[1] != H_T.shape[0]:
            raise InvalidConfigError(
                f"inconsistent shapes H_T {H_T.shape}, H_R {H_R.shape}")
        if not (np.isfinite(H_T).all() and np.isfinite(H_R).all()):
            raise InvalidConfigError("channel entries must be finite")
        object.__setattr__(self, "H_T", H_T)
        object.__setattr__(self, "H_R", H_R)

    @property
    def h_R(self) -> np.ndarray:
        """First user's RIS-to-receiver row (single-user shorthand)."""
        return self.H_R[0]

    @property
    def N(self) -> int:
        return self.H_T.shape[0]

    @property
    def M(self) -> int:
        return self.H_T.shape[1]

    @property
    def K(self) -> int:
        return self.H_R.shape[0]


@dataclass(frozen=True, eq=False)
class TrainingSet:
    realizations: tuple[ChannelRealization, ...]
    seed: int

    def __post_init__(self):
        if len(self.realizations) < 1:
            raise InvalidConfigError("a training set needs at least one realization")
        object.__setattr__(self, "realizations", tuple(self.realizations))

    def __len__(self):
        return len(self.realizations)

    def __iter__(self):
        return iter(self.realizations)

    def __getitem__(self, i):
        return self.realizations[i]


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *key)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def _cn(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)


class ChannelSampler:
    """Draws realizations for fixed dimensions; holds the covariance factors."""

    def __init__(self, spec: CorrelationSpec, K: int):
        if K < 1:
            raise InvalidConfigError("K must be >= 1")
        self.spec = spec
        self.K = K
        self.F_R = covariance_factor(spec.R_RIS)
        self.F_TX = covariance_factor(spec.R_TX)

    def draw(self, seed: int, index: int) -> ChannelRealization:
        N, M = self.spec.N, self.spec.M
        g = _cn(stream_rng(seed, index, 0), N * M).reshape(N, M)
        # (F_R kron F_TX) vec_row(G) == vec_row(F_R G F_TX^T)
        H_T = np.sqrt(self.spec.L_T) * (self.F_R @ g @ self.F_TX.T)
        H_R = np.empty((self.K, N), dtype=complex)
        for k in range(self.K):
            H_R[k] = np.sqrt(self.spec.L_R) * (self.F_R @ _cn(stream_rng(seed, index, k + 1), N))
        return ChannelRealization(H_T, H_R)


def sample_realizations(cfg: SystemConfig, spec: CorrelationSpec, count: int,
                        seed: int, start: int = 0) -> TrainingSet:
    """Draw ``count`` independent realizations with indices ``start..start+count-1``."""
    if count < 1:
        raise InvalidConfigError("count must be >= 1")
    if spec.N != cfg.N or spec.M != cfg.M:
        raise InvalidConfigError(
            f"correlation spec ({spec.N}x{spec.M}) inconsistent with config ({cfg.N}x{cfg.M})")
    sampler = ChannelSampler(spec, cfg.K)
    return TrainingSet(tuple(sampler.draw(seed, start + c) for c in range(count)), int(seed))


# -- binary dump -------------------------------------------------------------

_MAGIC = b"BDRISCH1"
_HEADER = struct.Struct("<8s4qQ")


def save_training_set(ts: TrainingSet, path: str | Path) -> None:
    """Write ``ts`` as a little-endian binary file.

    Layout: magic ``BDRISCH1``, int64 ``N, M, K, C``, uint64 ``seed``, then for each
    realization ``H_T`` (row-major) followed by ``H_R`` (row-major), every
    complex entry as interleaved float64 real/imaginary parts.
    """
    first = ts[0]
    N, M, K = first.N, first.M, first.K
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, N, M, K, len(ts), int(ts.seed)))
        for r in ts:
            fh.write(np.ascontiguousarray(r.H_T, dtype="<c16").tobytes())
            fh.write(np.ascontiguousarray(r.H_R, dtype="<c16").tobytes())


def load_training_set(path: str | Path) -> TrainingSet:
    with open(path, "rb") as fh:
        magic, N, M, K, C, seed = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise InvalidConfigError(f"{path}: not a bdris channel file")
        data = np.frombuffer(fh.read(), dtype="<c16")
    per = N * M + K * N
    if data.size != C * per:
        raise InvalidConfigError(f"{path}: truncated payload")
    out = []
    for c in range(C):
        chunk = data[c * per:(c + 1) * per]
        out.append(ChannelRealization(chunk[:N * M].reshape(N, M).copy(),
                                      chunk[N * M:].reshape(K, N).copy()))
    return TrainingSet(tuple(out), seed)


def save_training_set_csv(ts: TrainingSet, path: str | Path) -> None:
    """CSV variant: a ``# N,M,K,C,seed`` header line, then one row per realization.

    Each row holds ``H_T`` (row-major) followed by ``H_R`` (row-major) as
    interleaved real/imaginary float64 values in shortest round-trip form.
    """
    first = ts[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# N={first.N},M={first.M},K={first.K},C={len(ts)},seed={ts.seed}\n")
        for r in ts:
            flat = np.concatenate([r.H_T.ravel(), r.H_R.ravel()])
            vals = np.column_stack([flat.real, flat.imag]).ravel()
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def load_training_set_csv(path: str | Path) -> TrainingSet:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().lstrip("#").strip()
        meta = dict(item.split("=") for item in header.split(","))
        N, M, K, C, seed = (int(meta[k]) for k in ("N", "M", "K", "C", "seed"))
        rows = [np.array(line.split(","), dtype=float) for line in fh if line.strip()]
    if len(rows) != C:
        raise InvalidConfigError(f"{path}: expected {C} rows, found {len(rows)}")
    out = []
    for vals in rows:
        z = vals[0::2] + 1j * vals[1::2]
        out.append(ChannelRealization(z[:N * M].reshape(N, M), z[N * M:].reshape(K, N)))
    return TrainingSet(tuple(out), seed)
