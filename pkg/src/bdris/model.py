"""Structural model of a group-connected BD-RIS.

A grouping strategy is a permutation of the ``N`` RIS elements; consecutive
runs of ``N_G`` permuted indices form the groups.  Indices are 0-based in
code and 1-based only at I/O boundaries (partition strings, CSV grids).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidConfigError, InvariantViolationError

#: absolute tolerance (max entry) for symmetry / unitarity checks
STRUCTURE_TOL = 1e-10


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of the RIS-aided MISO system.

    Defaults reproduce the evaluation setup: transmitter, RIS and users at
    (0, 0), (50, 2), (52, 0) m, a 4-antenna ULA, an 8x8 UPA, L0 = -30 dB,
    path-loss exponents 2.8 (RIS-user) and 2 (transmitter-RIS), and a noise
    power of -80 dBm.  ``P_T`` is not given by the source setup; 1 W is used.
    """

    N_H: int = 8
    N_V: int = 8
    M: int = 4
    K: int = 1
    N_G: int = 4
    Z0: float = 50.0
    P_T: float = 1.0
    sigma_z2: float = 1e-11
    rho: float = 0.8
    L0: float = 1e-3
    alpha_R: float = 2.8
    alpha_T: float = 2.0
    tx_pos: tuple[float, float] = (0.0, 0.0)
    ris_pos: tuple[float, float] = (50.0, 2.0)
    rx_pos: tuple[float, float] = (52.0, 0.0)

    def __post_init__(self):
        for name in ("N_H", "N_V", "M", "K", "N_G"):
            if int(getattr(self, name)) < 1:
                raise InvalidConfigError(f"{name} must be a positive integer")
        if self.N % self.N_G:
            raise InvalidConfigError(f"N_G={self.N_G} does not divide N={self.N}")
        if not self.Z0 > 0:
            raise InvalidConfigError("Z0 must be positive")
        if not 0 <= self.rho < 1:
            raise InvalidConfigError("rho must lie in [0, 1)")
        if not self.P_T > 0:
            raise InvalidConfigError("P_T must be positive")
        if not self.sigma_z2 > 0:
            raise InvalidConfigError("sigma_z2 must be positive")
        if not self.L0 > 0:
            raise InvalidConfigError("L0 must be positive")
        if self.d_R <= 0 or self.d_T <= 0:
            raise InvalidConfigError("node positions must be distinct")

    @property
    def N(self) -> int:
        return self.N_H * self.N_V

    @property
    def G(self) -> int:
        return self.N // self.N_G

    @property
    def d_T(self) -> float:
        """Transmitter-to-RIS distance in meters."""
        return math.dist(self.tx_pos, self.ris_pos)

    @property
    def d_R(self) -> float:
        """RIS-to-receiver distance in meters."""
        return math.dist(self.ris_pos, self.rx_pos)


@dataclass(frozen=True, eq=False)
class GroupingStrategy:
    """Permutation ``perm`` (0-based) whose consecutive ``group_size`` runs are groups.

    Two strategies compare equal (and hash equal) iff they induce the same
    partition of the elements; the order of groups and the order inside a
    group are irrelevant.
    """

    perm: tuple[int, ...]
    group_size: int
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        object.__setattr__(self, "perm", perm)
        n = len(perm)
        if self.group_size < 1 or n == 0 or n % self.group_size:
            raise InvalidConfigError(
                f"group size {self.group_size} does not divide N={n}")
        if sorted(perm) != list(range(n)):
            raise InvalidConfigError("perm is not a permutation of 0..N-1")
        groups = (perm[i:i + self.group_size] for i in range(0, n, self.group_size))
        key = tuple(sorted(tuple(sorted(g)) for g in groups))
        object.__setattr__(self, "_key", key)

    @classmethod
    def from_groups(cls, groups: Iterable[Sequence[int]]) -> "GroupingStrategy":
        """Build a strategy from explicit 0-based groups of equal size."""
        groups = [list(g) for g in groups]
        sizes = {len(g) for g in groups}
        if len(sizes) != 1:
            raise InvalidConfigError("all groups must have the same size")
        return cls(tuple(i for g in groups for i in g), sizes.pop())

    @property
    def N(self) -> int:
        return len(self.perm)

    @property
    def G(self) -> int:
        return self.N // self.group_size

    @property
    def groups(self) -> tuple[tuple[int, ...], ...]:
        """Groups in permutation order (0-based element indices)."""
        ng = self.group_size
        return tuple(self.perm[i:i + ng] for i in range(0, self.N, ng))

    @property
    def partition(self) -> tuple[tuple[int, ...], ...]:
        """Canonical partition: sorted groups ordered by smallest member."""
        return self._key

    def canonical(self) -> "GroupingStrategy":
        return GroupingStrategy(tuple(i for g in self._key for i in g), self.group_size)

    def group_index(self) -> np.ndarray:
        """``(G, N_G)`` integer array of element indices per group."""
        return np.asarray(self.perm, dtype=np.intp).reshape(self.G, self.group_size)

    def labels(self) -> np.ndarray:
        """Length-N array with the 0-based canonical group id of each element."""
        out = np.empty(self.N, dtype=np.intp)
        for g, members in enumerate(self._key):
            out[list(members)] = g
        return out

    def to_string(self) -> str:
        """1-based partition string, e.g. ``1-3|2-4``."""
        return "|".join("-".join(str(i + 1) for i in g) for g in self._key)

    @classmethod
    def from_string(cls, text: str) -> "GroupingStrategy":
        return cls.from_groups(
            [int(tok) - 1 for tok in part.split("-")] for part in text.strip().split("|"))

    def __eq__(self, other):
        if not isinstance(other, GroupingStrategy):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __lt__(self, other):
        return self._key < other._key


@dataclass(frozen=True, eq=False)
class ScatteringBlocks:
    """Stack of ``G`` complex symmetric unitary ``N_G x N_G`` blocks."""

    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=complex)
        if b.ndim == 2:
            b = b[None]
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise InvalidConfigError(f"blocks must have shape (G, n, n), got {b.shape}")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "blocks", b)
        sym = np.abs(b - b.transpose(0, 2, 1)).max()
        eye = np.eye(b.shape[1])
        uni = np.abs(b.conj().transpose(0, 2, 1) @ b - eye).max()
        if sym > STRUCTURE_TOL or uni > STRUCTURE_TOL:
            raise InvariantViolationError(
                f"scattering blocks not symmetric unitary (asym={sym:.2e}, unitarity={uni:.2e})")

    def __len__(self):
        return self.blocks.shape[0]

    @property
    def group_size(self) -> int:
        return self.blocks.shape[1]

    def block_diag(self) -> np.ndarray:
        return _block_diag(self.blocks)


@dataclass(frozen=True, eq=False)
class ReactanceBlocks:
    """Stack of ``G`` real symmetric ``N_G x N_G`` reactance blocks (ohm)."""

    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=float)
        if b.ndim == 2:
            b = b[None]
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise InvalidConfigError(f"blocks must have shape (G, n, n), got {b.shape}")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "blocks", b)
        if np.abs(b - b.transpose(0, 2, 1)).max() > STRUCTURE_TOL:
            raise InvariantViolationError("reactance blocks must be symmetric")

    def __len__(self):
        return self.blocks.shape[0]

    def scattering(self, Z0: float = 50.0) -> ScatteringBlocks:
        return ScatteringBlocks(cayley_scattering(self.blocks, Z0))


def _block_diag(blocks: np.ndarray) -> np.ndarray:
    G, n, _ = blocks.shape
    out = np.zeros((G * n, G * n), dtype=blocks.dtype)
    for g in range(G):
        out[g * n:(g + 1) * n, g * n:(g + 1) * n] = blocks[g]
    return out


def sequential_grouping(N: int, N_G: int) -> GroupingStrategy:
    """Adjacent-index grouping (identity permutation), the non-optimized baseline."""
    if N_G < 1 or N < 1 or N % N_G:
        raise InvalidConfigError(f"N_G={N_G} does not divide N={N}")
    return GroupingStrategy(tuple(range(N)), N_G)


def permutation_matrix(s: GroupingStrategy) -> np.ndarray:
    """``P`` with column ``n`` equal to the basis vector ``e_{perm[n]}``."""
    P = np.zeros((s.N, s.N))
    P[list(s.perm), np.arange(s.N)] = 1.0
    return P


def assemble_scattering(s: GroupingStrategy, t: ScatteringBlocks) -> np.ndarray:
    """Full ``N x N`` scattering matrix ``P diag(blocks) P^T``.

    Computed by scattering the block-diagonal entries to permuted positions
    rather than by explicit matrix products.
    """
    if len(t) != s.G or t.group_size != s.group_size:
        raise InvalidConfigError(
            f"{len(t)} blocks of size {t.group_size} do not match "
            f"G={s.G}, N_G={s.group_size}")
    bd = t.block_diag()
    perm = np.asarray(s.perm)
    theta = np.empty_like(bd)
    theta[np.ix_(perm, perm)] = bd
    return theta


def cayley_scattering(X: np.ndarray, Z0: float = 50.0) -> np.ndarray:
    """Scattering matrix of a lossless reciprocal network with reactance ``X``.

    ``Theta = (jX + Z0 I)^-1 (jX - Z0 I)``.  Accepts a single ``(n, n)`` matrix
    or a stack ``(..., n, n)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise InvalidConfigError(f"X must be square, got shape {X.shape}")
    if not Z0 > 0:
        raise InvalidConfigError("Z0 must be positive")
    asym = np.abs(X - np.swapaxes(X, -1, -2)).max() if X.size else 0.0
    scale = max(1.0, np.abs(X).max()) if X.size else 1.0
    if asym > STRUCTURE_TOL * scale:
        raise InvariantViolationError(f"reactance matrix is not symmetric (asym={asym:.2e})")
    eye = np.eye(X.shape[-1])
    jX = 1j * X
    return np.linalg.solve(jX + Z0 * eye, jX - Z0 * eye)


def reactance_from_scattering(theta: np.ndarray, Z0: float = 50.0) -> np.ndarray:
    """Inverse of :func:`cayley_scattering`: ``X = -j Z0 (I + Theta)(I - Theta)^-1``.

    Undefined when ``Theta`` has an eigenvalue at +1.
    """
    theta = np.asarray(theta, dtype=complex)
    eye = np.eye(theta.shape[-1])
    # (I - T)^-1 and (I + T) commute, so solve from the right via transposes
    jX = Z0 * np.swapaxes(
        np.linalg.solve(np.swapaxes(eye - theta, -1, -2), np.swapaxes(eye + theta, -1, -2)),
        -1, -2)
    X = (-1j * jX).real
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def count_groupings(N: int, N_G: int) -> int:
    """Number of distinct partitions of ``N`` elements into groups of ``N_G``.

    ``N! / (G! (N_G!)^G)`` evaluated as a product of binomials divided by
    ``G!``; Python integers are unbounded so there is no overflow limit.
    """
    if N_G < 1 or N < 1 or N % N_G:
        raise InvalidConfigError(f"N_G={N_G} does not divide N={N}")
    G = N // N_G
    total = 1
    remaining = N
    for _ in range(G):
        total *= math.comb(remaining, N_G)
        remaining -= N_G
    count, rem = divmod(total, math.factorial(G))
    assert rem == 0
    return count
