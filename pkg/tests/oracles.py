"""Brute-force reference implementations used only by the tests."""
import numpy as np


def all_set_partitions(items):
    """Every set partition of ``items`` (element-insertion recursion)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in all_set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def set_partitions_equal(N, N_G):
    """Partitions of range(N) whose blocks all have size N_G."""
    return [tuple(tuple(sorted(b)) for b in p)
            for p in all_set_partitions(list(range(N))) if all(len(b) == N_G for b in p)]


def surrogate_by_hand(groups, a, b):
    """(1/C) sum_c (sum_g ||a_c[g]|| ||b_c[g]||)^2 with explicit loops."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    total = 0.0
    for c in range(a.shape[0]):
        s = 0.0
        for g in groups:
            s += np.sqrt(sum(a[c, i] ** 2 for i in g)) * np.sqrt(sum(b[c, i] ** 2 for i in g))
        total += s ** 2
    return total / a.shape[0]


def haar_unitary(n, rng, shape=()):
    """Batched Haar unitaries via QR of complex Gaussians with the R-diagonal phase fix."""
    Z = crandn(rng, *shape, n, n)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[..., None, :]


def random_blocks(G, n, rng, count):
    """``count`` stacks of G random symmetric unitary n x n blocks, shape (count, G, n, n)."""
    U = haar_unitary(n, rng, (count, G))
    return U @ np.swapaxes(U, -1, -2)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
