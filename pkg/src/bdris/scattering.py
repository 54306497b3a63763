"""Online (per-realization) optimization of the block-diagonal scattering matrix.

Channels are first moved to grouped coordinates, ``h_bar = h_R P`` and
``H_bar_T = P^T H_T``, so that group ``g`` occupies the contiguous slice
``g*N_G:(g+1)*N_G``.  With ``P[:, n] = e_{perm[n]}`` this is plain
fancy-indexing by ``perm``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import minimize

from .channel import ChannelRealization
from .errors import DegenerateInputError, InvalidConfigError, OptimizationFailure
from .grouping import dominant_singular_triplet
from .model import (GroupingStrategy, ReactanceBlocks, ScatteringBlocks, cayley_scattering,
                    reactance_from_scattering)

UNIT_TOL = 1e-10
SU_TOL = 1e-8
SU_MAX_ITER = 200


def grouped_channels(s: GroupingStrategy, ch: ChannelRealization):
    """Return ``(H_R P, P^T H_T)`` for the strategy's permutation."""
    perm = np.asarray(s.perm)
    if ch.N != s.N:
        raise InvalidConfigError(f"channel has N={ch.N}, strategy has N={s.N}")
    return ch.H_R[:, perm], ch.H_T[perm, :]


# -- closed-form single-group optimum ---------------------------------------

def _symmetric_unitary_maps(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched symmetric unitary ``Theta`` with ``Theta a = b``; ``a, b`` are ``(G, n)``.

    Writing ``Theta = V V^T`` with ``V`` unitary, the condition becomes
    ``V z = b`` and ``V conj(z) = conj(a)`` for ``z = V^H b``.  Any unit ``z``
    with ``z^T z = a^T b`` makes the two Gram matrices agree, so the
    orthogonal-Procrustes solution for ``V`` satisfies both exactly.
    """
    G, n = a.shape
    if n == 1:
        return (b * a.conj())[:, :, None]
    c = np.sum(a * b, axis=1)
    psi = np.angle(c)
    t = 0.5 * np.arccos(np.clip(np.abs(c), 0.0, 1.0))
    z = np.zeros((G, n), dtype=complex)
    half = np.exp(0.5j * psi)
    z[:, 0] = half * np.cos(t)
    z[:, 1] = half * 1j * np.sin(t)
    Z = np.stack([z, z.conj()], axis=2)
    B = np.stack([b, a.conj()], axis=2)
    U, _, Wh = np.linalg.svd(B @ Z.conj().transpose(0, 2, 1))
    V = U @ Wh
    theta = V @ V.transpose(0, 2, 1)
    return 0.5 * (theta + theta.transpose(0, 2, 1))


def symmetric_unitary_map(a, b) -> np.ndarray:
    """A complex symmetric unitary matrix mapping unit vector ``a`` to unit vector ``b``."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise InvalidConfigError(f"length mismatch {a.shape} vs {b.shape}")
    for name, v in (("a", a), ("b", b)):
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise InvalidConfigError(f"{name} must have unit norm, got {np.linalg.norm(v):.12g}")
    return _symmetric_unitary_maps(a[None], b[None])[0]


def closed_form_blocks(s: GroupingStrategy, h_bar, u) -> ScatteringBlocks:
    """Blocks maximizing ``|h_bar Theta_bar u|`` for grouped-coordinate ``h_bar``, ``u``.

    Each block maps ``u_g / ||u_g||`` onto ``h_g^H / ||h_g||``, so every group
    contributes the real value ``||h_g|| ||u_g||``.  Groups where either
    subvector vanishes get ``-I``.
    """
    G, n = s.G, s.group_size
    h = np.asarray(h_bar, dtype=complex).reshape(G, n)
    u = np.asarray(u, dtype=complex).reshape(G, n)
    hn = np.linalg.norm(h, axis=1)
    un = np.linalg.norm(u, axis=1)
    floor = np.finfo(float).eps * max(hn.max(), un.max(), np.finfo(float).tiny)
    ok = (hn > floor) & (un > floor)
    if not ok.any():
        raise DegenerateInputError("every group has a vanishing channel subvector")
    blocks = np.tile(-np.eye(n, dtype=complex), (G, 1, 1))
    blocks[ok] = _symmetric_unitary_maps(u[ok] / un[ok, None], h[ok].conj() / hn[ok, None])
    return ScatteringBlocks(blocks)


def _apply_blocks(blocks: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``blockdiag(blocks) @ x`` for ``x`` of shape ``(N,)`` or ``(N, M)``."""
    G, n, _ = blocks.shape
    if x.ndim == 1:
        return np.einsum("gij,gj->gi", blocks, x.reshape(G, n)).ravel()
    return np.einsum("gij,gjm->gim", blocks, x.reshape(G, n, -1)).reshape(G * n, -1)


# -- single user -------------------------------------------------------------

def _alternating_spectral(s: GroupingStrategy, H_R: np.ndarray, H_T: np.ndarray,
                          tol: float, max_iter: int, callback=None):
    """Alternate closed-form blocks with the dominant singular pair of ``H_R Theta H_T``.

    For a single row ``H_R`` the left vector is trivial and the right one is
    the matched precoder.  Each step can only increase ``||H_R Theta H_T||_2``.
    """
    _, _, w = dominant_singular_triplet(H_T)
    u = np.ones(1, dtype=complex) if H_R.shape[0] == 1 else None
    if u is None:
        _, u, _ = dominant_singular_triplet(H_R)
    best, best_val, prev = None, -np.inf, -np.inf
    for it in range(max_iter):
        Hw = H_T @ w
        h = u.conj() @ H_R
        blocks = closed_form_blocks(s, h, Hw / np.linalg.norm(Hw))
        E = H_R @ _apply_blocks(blocks.blocks, H_T)
        sigma, uu, w = dominant_singular_triplet(E)
        if H_R.shape[0] > 1:
            u = uu
        val = sigma ** 2
        if callback is not None:
            callback(it, val)
        if val >= best_val:
            best, best_val = blocks, val
        if abs(val - prev) <= tol * abs(val):
            break
        prev = val
    return best, float(best_val)


def optimize_scattering_su(s: GroupingStrategy, ch: ChannelRealization,
                           tol: float = SU_TOL, max_iter: int = SU_MAX_ITER,
                           callback: Callable[[int, float], None] | None = None):
    """Alternating optimization of the blocks and an auxiliary unit precoder.

    Starts from ``w`` equal to the dominant right singular vector of
    ``H_bar_T``; then repeats the closed-form block update for fixed ``w`` and
    the matched update ``w = (h_bar Theta H_bar_T)^H / ||.||`` until the
    relative change of the channel gain drops below ``tol``.

    Returns ``(blocks, gain)`` with ``gain = ||h_bar Theta_bar H_bar_T||^2``.
    """
    if ch.K != 1:
        raise InvalidConfigError(f"single-user optimizer needs K=1, got K={ch.K}")
    H_R, H_T = grouped_channels(s, ch)
    if not np.any(H_R) or not np.any(H_T):
        raise DegenerateInputError("zero channel")
    return _alternating_spectral(s, H_R, H_T, tol, max_iter, callback)


# -- multi user --------------------------------------------------------------

@dataclass(frozen=True)
class QuasiNewtonOptions:
    """Settings of the reactance-domain quasi-Newton solver.

    The solver works on ``X / Z0`` and on the objective normalized by
    ``||H_R||_2^2 ||H_T||_2^2``; ``gradient_tolerance`` applies to that
    scaled problem.  ``init_scale`` is in ohm.

    Starting points are taken in this order until ``restarts`` runs are
    made: the spectral-norm alternating solution mapped to reactances
    (``warm_start``), ``X = 0`` (``zero_start``), then i.i.d. normal
    reactances with standard deviation ``init_scale``.  Deterministic starts
    always run even when they exceed ``restarts``.
    """

    max_iterations: int = 500
    gradient_tolerance: float = 1e-6
    init_scale: float = 100.0
    restarts: int = 1
    finite_difference_step: float = 1e-4
    zero_start: bool = False
    warm_start: bool = True
    warm_start_iterations: int = 50

    def __post_init__(self):
        for name in ("max_iterations", "gradient_tolerance", "init_scale",
                     "restarts", "finite_difference_step"):
            if not getattr(self, name) > 0:
                raise InvalidConfigError(f"{name} must be positive")


class MUReport(NamedTuple):
    status: str  # "gradient", "max_iterations" or "stalled"
    iterations: int
    gradient_norm: float
    initial_objective: float
    rejected_steps: int


class MUSolution(NamedTuple):
    reactance: ReactanceBlocks
    scattering: ScatteringBlocks
    objective: float
    report: MUReport


def _triu(n):
    return np.triu_indices(n)


def unpack_reactance(x: np.ndarray, G: int, n: int) -> np.ndarray:
    """Upper-triangular parameter vector -> stack of symmetric ``(G, n, n)`` blocks."""
    iu = _triu(n)
    X = np.zeros((G, n, n))
    X[:, iu[0], iu[1]] = np.reshape(x, (G, -1))
    return X + np.triu(X, 1).transpose(0, 2, 1)


def pack_reactance(X: np.ndarray) -> np.ndarray:
    iu = _triu(X.shape[-1])
    return X[:, iu[0], iu[1]].ravel()


class MUObjective:
    """``f(x) = ||H_bar_R Theta_bar(X) H_bar_T||_F^2`` over upper-triangular reactances (ohm)."""

    def __init__(self, s: GroupingStrategy, ch: ChannelRealization, Z0: float = 50.0):
        H_R, H_T = grouped_channels(s, ch)
        self.G, self.n, self.Z0 = s.G, s.group_size, float(Z0)
        self.R = H_R.reshape(ch.K, self.G, self.n).transpose(1, 0, 2)  # (G, K, n)
        self.T = H_T.reshape(self.G, self.n, ch.M)                      # (G, n, M)
        self.size = self.G * self.n * (self.n + 1) // 2
        self.scale = (np.linalg.norm(H_R, 2) * np.linalg.norm(H_T, 2)) ** 2

    def _parts(self, x):
        X = unpack_reactance(x, self.G, self.n)
        A = 1j * X + self.Z0 * np.eye(self.n)
        Ainv = np.linalg.inv(A)
        theta = np.eye(self.n) - 2.0 * self.Z0 * Ainv
        E = np.einsum("gkn,gnm,gml->kl", self.R, theta, self.T)
        return Ainv, E

    def __call__(self, x) -> float:
        _, E = self._parts(np.asarray(x, dtype=float))
        return float(np.vdot(E, E).real)

    def value_and_grad(self, x):
        Ainv, E = self._parts(np.asarray(x, dtype=float))
        f = float(np.vdot(E, E).real)
        Mg = self.T @ E.conj().T[None] @ self.R               # (G, n, n)
        full = (4j * self.Z0 * (Ainv @ Mg @ Ainv)).real.transpose(0, 2, 1)
        sym = full + full.transpose(0, 2, 1)
        idx = np.arange(self.n)
        sym[:, idx, idx] = full[:, idx, idx]
        return f, pack_reactance(sym)

    def grad(self, x):
        return self.value_and_grad(x)[1]

    def fd_grad(self, x, step: float = 1e-4):
        """Central finite differences with step ``step * max(1, |x_i|)``."""
        x = np.asarray(x, dtype=float)
        g = np.empty_like(x)
        for i in range(x.size):
            h = step * max(1.0, abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            g[i] = (self(xp) - self(xm)) / (2 * h)
        return g


def _warm_start(s, ch, obj: MUObjective, iterations: int) -> np.ndarray:
    """Scaled reactances (``X / Z0``) of the spectral-norm alternating solution."""
    H_R, H_T = grouped_channels(s, ch)
    blocks, _ = _alternating_spectral(s, H_R, H_T, SU_TOL, iterations)
    theta = blocks.blocks
    # keep away from the eigenvalue +1, which has no finite reactance
    lam, Q = np.linalg.eig(theta)
    near = np.abs(lam - 1.0) < 1e-6
    if near.any():
        lam = np.where(near, np.exp(1j * 1e-3) * lam, lam)
        theta = Q @ (lam[..., None] * np.linalg.inv(Q))
    X = reactance_from_scattering(theta, obj.Z0)
    return pack_reactance(X) / obj.Z0


def optimize_scattering_mu(s: GroupingStrategy, ch: ChannelRealization,
                           opts: QuasiNewtonOptions | None = None, Z0: float = 50.0,
                           rng: np.random.Generator | None = None) -> MUSolution:
    """Maximize ``||H_bar_R Theta_bar H_bar_T||_F^2`` over the free reactances.

    Every block is ``Theta_g = cayley_scattering(X_g)``; the independent
    variables are the upper-triangular entries of each ``X_g``, optimized
    with L-BFGS using the analytic gradient.  The best of ``opts.restarts``
    runs is returned; see :class:`QuasiNewtonOptions` for the starting points.
    """
    opts = opts or QuasiNewtonOptions()
    rng = rng if rng is not None else np.random.default_rng()
    obj = MUObjective(s, ch, Z0)
    if obj.scale == 0.0:
        raise DegenerateInputError("zero channel")
    c = obj.Z0 / obj.scale
    rejected = 0

    def neg(y):
        nonlocal rejected
        f, g = obj.value_and_grad(obj.Z0 * y)
        if not (np.isfinite(f) and np.isfinite(g).all()):
            rejected += 1
            return np.inf, np.zeros_like(y)
        return -f / obj.scale, -c * g

    starts = []
    if opts.warm_start:
        starts.append(_warm_start(s, ch, obj, opts.warm_start_iterations))
    if opts.zero_start:
        starts.append(np.zeros(obj.size))
    while len(starts) < opts.restarts:
        starts.append(rng.standard_normal(obj.size) * (opts.init_scale / obj.Z0))

    best = None
    for y0 in starts:
        f0 = obj(obj.Z0 * y0)
        res = minimize(neg, y0, jac=True, method="L-BFGS-B",
                       options={"maxiter": opts.max_iterations,
                                "gtol": opts.gradient_tolerance,
                                "ftol": 1e-15, "maxcor": 20})
        y = res.x
        f, g = obj.value_and_grad(obj.Z0 * y)
        if not np.isfinite(f) or f < f0:
            y, f = y0, f0
            g = obj.grad(obj.Z0 * y)
        gnorm = float(np.abs(c * g).max()) if g.size else 0.0
        if gnorm <= opts.gradient_tolerance:
            status = "gradient"
        elif res.nit >= opts.max_iterations:
            status = "max_iterations"
        else:
            status = "stalled"
        if best is None or f > best[1]:
            best = (y, f, MUReport(status, int(res.nit), gnorm, f0, rejected))
    if best is None or not np.isfinite(best[1]):
        raise OptimizationFailure("all quasi-Newton restarts failed", best=best)
    y, f, report = best
    X = unpack_reactance(obj.Z0 * y, obj.G, obj.n)
    theta = cayley_scattering(X, obj.Z0)
    theta = 0.5 * (theta + theta.transpose(0, 2, 1))
    return MUSolution(ReactanceBlocks(X), ScatteringBlocks(theta), float(f), report)
