"""Offline grouping-strategy search.

The surrogate objective for a partition into groups ``G_1..G_G`` is::

    (1/C) * sum_c ( sum_g ||a_c[G_g]|| * ||b_c[G_g]|| )^2

where, per training realization ``c``, ``b_c`` holds the magnitudes of the
dominant left singular vector of ``H_T`` and ``a_c`` the magnitudes of
``h_R`` (single user) or of the dominant right singular vector of ``H_R``
(multi user).  Permuting the channels only permutes singular-vector
entries, so one SVD per realization on the unpermuted channels suffices and
a grouping is evaluated by index selection.
"""
from __future__ import annotations

import csv
import io
from itertools import combinations
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .channel import ChannelRealization
from .errors import DegenerateInputError, InvalidConfigError
from .model import GroupingStrategy, sequential_grouping

Objective = Literal["single-user", "multi-user"]

POWER_TOL = 1e-10
POWER_MAX_ITER = 5000


def dominant_singular_triplet(A, method: str = "svd", tol: float = POWER_TOL,
                              max_iter: int = POWER_MAX_ITER):
    """Largest singular value and its unit singular vectors ``(sigma, u, v)``.

    ``A v = sigma u`` and ``A^H u = sigma v``.  The global phase is fixed so
    that the first non-negligible entry of ``u`` is real and positive.
    ``method="power"`` runs power iteration on ``A^H A`` instead of a full SVD.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    scale = np.abs(A).max() if A.size else 0.0
    if scale == 0.0:
        raise DegenerateInputError("dominant singular triplet of a zero matrix")
    if method == "svd":
        U, S, Vh = np.linalg.svd(A)
        sigma, u, v = S[0], U[:, 0], Vh[0].conj()
    elif method == "power":
        sigma, u, v = _power_iteration(A, tol, max_iter)
    else:
        raise InvalidConfigError(f"unknown method {method!r}")
    k = int(np.argmax(np.abs(u) > 1e-12 * np.abs(u).max()))
    phase = np.exp(-1j * np.angle(u[k]))
    u, v = u * phase, v * phase
    u[k] = abs(u[k])
    return float(sigma), u, v


def _power_iteration(A, tol, max_iter):
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = A.conj().T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            raise DegenerateInputError("power iteration collapsed to zero")
        w /= nw
        # phase-insensitive residual test
        c = np.vdot(w, v)
        done = np.linalg.norm(w * (c / abs(c)) - v) < tol if c != 0 else False
        v = w
        if done:
            break
    Av = A @ v
    sigma = np.linalg.norm(Av)
    return sigma, Av / sigma, v


@dataclass(frozen=True, eq=False)
class SurrogatePrecompute:
    """Per-realization magnitude vectors ``a`` and ``b``, each ``(C, N)``."""

    a: np.ndarray
    b: np.ndarray
    kind: Objective

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape:
            raise InvalidConfigError(f"shape mismatch {a.shape} vs {b.shape}")
        if (a < 0).any() or (b < 0).any():
            raise InvalidConfigError("magnitudes must be nonnegative")
        if self.kind not in ("single-user", "multi-user"):
            raise InvalidConfigError(f"unknown objective kind {self.kind!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def C(self) -> int:
        return self.a.shape[0]

    @property
    def N(self) -> int:
        return self.a.shape[1]


def su_precompute(training: Iterable[ChannelRealization], method: str = "svd") -> SurrogatePrecompute:
    a, b = [], []
    for ch in training:
        _, u_T, _ = dominant_singular_triplet(ch.H_T, method)
        a.append(np.abs(ch.h_R))
        b.append(np.abs(u_T))
    return SurrogatePrecompute(np.array(a), np.array(b), "single-user")


def mu_precompute(training: Iterable[ChannelRealization], method: str = "svd") -> SurrogatePrecompute:
    a, b = [], []
    for ch in training:
        _, u_T, _ = dominant_singular_triplet(ch.H_T, method)
        _, _, v_R = dominant_singular_triplet(ch.H_R, method)
        a.append(np.abs(v_R))
        b.append(np.abs(u_T))
    return SurrogatePrecompute(np.array(a), np.array(b), "multi-user")


def precompute(training, objective: Objective, method: str = "svd") -> SurrogatePrecompute:
    if objective == "single-user":
        return su_precompute(training, method)
    if objective == "multi-user":
        return mu_precompute(training, method)
    raise InvalidConfigError(f"unknown objective {objective!r}")


def grouping_objective(s: GroupingStrategy, pre: SurrogatePrecompute) -> float:
    """Evaluate the surrogate for ``s``; groups are taken in canonical order."""
    if s.N != pre.N:
        raise InvalidConfigError(f"strategy has N={s.N}, precompute has N={pre.N}")
    idx = s.canonical().group_index()
    sa = (pre.a[:, idx] ** 2).sum(axis=2)
    sb = (pre.b[:, idx] ** 2).sum(axis=2)
    total = np.sqrt(sa * sb).sum(axis=1)
    return float(np.mean(total ** 2))


def su_grouping_objective(s: GroupingStrategy, pre: SurrogatePrecompute) -> float:
    if pre.kind != "single-user":
        raise InvalidConfigError("single-user objective needs a single-user precompute")
    return grouping_objective(s, pre)


def mu_grouping_objective(s: GroupingStrategy, pre: SurrogatePrecompute) -> float:
    if pre.kind != "multi-user":
        raise InvalidConfigError("multi-user objective needs a multi-user precompute")
    return grouping_objective(s, pre)


def _swap_positions(N: int, N_G: int):
    """Position pairs ``(i, j)``, ``i < j``, lying in different groups."""
    i, j = np.triu_indices(N, k=1)
    keep = (i // N_G) != (j // N_G)
    return i[keep], j[keep]


def swap(s: GroupingStrategy, i: int, j: int) -> GroupingStrategy:
    perm = list(s.perm)
    perm[i], perm[j] = perm[j], perm[i]
    return GroupingStrategy(tuple(perm), s.group_size)


def swap_neighborhood(s: GroupingStrategy) -> list[GroupingStrategy]:
    """All strategies reached by exchanging two elements of different groups.

    One entry per cross-group element pair, so the list has exactly
    ``N (N - N_G) / 2`` entries; for ``N_G = 2`` some of them coincide as
    partitions (see :func:`distinct_neighbors`).
    """
    I, J = _swap_positions(s.N, s.group_size)
    return [swap(s, i, j) for i, j in zip(I.tolist(), J.tolist())]


def distinct_neighbors(s: GroupingStrategy) -> frozenset[GroupingStrategy]:
    return frozenset(swap_neighborhood(s))


@dataclass
class SearchTrace:
    """Per-iteration record of the local search; entry 0 is the initialization."""

    objectives: list[float] = field(default_factory=list)
    strategies: list[GroupingStrategy] = field(default_factory=list)
    n_evaluated: list[int] = field(default_factory=list)

    def append(self, value, strategy, n_eval):
        self.objectives.append(float(value))
        self.strategies.append(strategy)
        self.n_evaluated.append(int(n_eval))

    def __len__(self):
        return len(self.objectives)

    @property
    def iterations(self) -> int:
        return len(self.objectives) - 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "objective", "n_evaluated", "accepted_partition_string"])
        for i, (f, s, n) in enumerate(zip(self.objectives, self.strategies, self.n_evaluated)):
            w.writerow([i, repr(f), n, s.to_string()])
        return buf.getvalue()


class _SwapState:
    """Per-group squared-norm sums supporting O(C) evaluation of any swap."""

    def __init__(self, pre: SurrogatePrecompute, s: GroupingStrategy):
        self.a2 = pre.a ** 2
        self.b2 = pre.b ** 2
        self.N_G = s.group_size
        self.I, self.J = _swap_positions(s.N, s.group_size)
        self.reset(s)

    def reset(self, s: GroupingStrategy):
        self.s = s
        idx = s.group_index()
        self.perm = np.asarray(s.perm)
        self.SA = self.a2[:, idx].sum(axis=2)
        self.SB = self.b2[:, idx].sum(axis=2)
        self.t = np.sqrt(self.SA * self.SB)
        self.T = self.t.sum(axis=1)

    def neighbor_values(self) -> np.ndarray:
        """Objective of every swap neighbor, in :func:`swap_neighborhood` order."""
        I, J, N_G = self.I, self.J, self.N_G
        ei, ej = self.perm[I], self.perm[J]
        gi, gj = I // N_G, J // N_G
        da = self.a2[:, ej] - self.a2[:, ei]
        db = self.b2[:, ej] - self.b2[:, ei]
        ti = np.sqrt(np.clip((self.SA[:, gi] + da) * (self.SB[:, gi] + db), 0.0, None))
        tj = np.sqrt(np.clip((self.SA[:, gj] - da) * (self.SB[:, gj] - db), 0.0, None))
        T = self.T[:, None] - self.t[:, gi] - self.t[:, gj] + ti + tj
        return np.mean(T ** 2, axis=0)


def optimize_grouping(pre: SurrogatePrecompute, N_G: int,
                      objective: Objective | None = None,
                      max_iterations: int | None = None):
    """Swap-neighborhood local search starting from the sequential grouping.

    Each iteration evaluates all ``N (N - N_G) / 2`` swap neighbors and moves
    to the best one if it strictly improves on the incumbent; ties keep the
    incumbent, and ties among neighbors go to the lowest canonical partition.
    Returns ``(strategy, trace)``; the last trace entry repeats the final
    strategy (the iteration at which nothing improved).
    """
    if objective is not None and objective != pre.kind:
        raise InvalidConfigError(
            f"objective {objective!r} does not match precompute kind {pre.kind!r}")
    current = sequential_grouping(pre.N, N_G)
    value = grouping_objective(current, pre)
    trace = SearchTrace()
    trace.append(value, current, 0)
    if current.G == 1:
        return current, trace

    state = _SwapState(pre, current)
    n_raw = len(state.I)
    visited = {current}
    it = 0
    while max_iterations is None or it < max_iterations:
        it += 1
        vals = state.neighbor_values()
        best = vals.max()
        cand = np.flatnonzero(vals == best)
        if len(cand) > 1:
            nxt = min(swap(current, state.I[c], state.J[c]) for c in cand)
        else:
            nxt = swap(current, state.I[cand[0]], state.J[cand[0]])
        nxt_value = grouping_objective(nxt, pre)
        if not nxt_value > value:
            trace.append(value, current, n_raw)
            break
        assert nxt not in visited
        visited.add(nxt)
        current, value = nxt, nxt_value
        state.reset(current)
        trace.append(value, current, n_raw)
    return current, trace


def exhaustive_partitions(N: int, N_G: int):
    """Yield every partition of ``range(N)`` into groups of ``N_G`` (small N only)."""

    def rec(remaining):
        if not remaining:
            yield []
            return
        first, rest = remaining[0], remaining[1:]
        for others in combinations(rest, N_G - 1):
            left = [x for x in rest if x not in others]
            for tail in rec(left):
                yield [(first, *others)] + tail

    if N % N_G:
        raise InvalidConfigError(f"N_G={N_G} does not divide N={N}")
    for groups in rec(list(range(N))):
        yield GroupingStrategy.from_groups(groups)
