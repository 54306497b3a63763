import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdris.errors import DegenerateInputError, InvalidConfigError, RankError
from bdris.link import (LN2, PrecoderSet, effective_channel, effective_channel_direct,
                        mrt_precoder, received_power, sum_rate, zf_precoders)
from bdris.model import GroupingStrategy, ScatteringBlocks

from oracles import crandn, random_blocks


def test_mrt_examples(rng):
    np.testing.assert_array_equal(mrt_precoder([1.0, 0.0]), [1.0, 0.0])
    h = crandn(rng, 4)
    w = mrt_precoder(h)
    assert np.linalg.norm(w) == pytest.approx(1.0)
    assert abs(h @ w) ** 2 == pytest.approx(np.linalg.norm(h) ** 2, rel=1e-12)
    with pytest.raises(DegenerateInputError):
        mrt_precoder(np.zeros(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mrt_dominates_other_unit_precoders(seed):
    rng = np.random.default_rng(seed)
    h = crandn(rng, 4)
    w = crandn(rng, 4)
    w /= np.linalg.norm(w)
    assert abs(h @ w) ** 2 <= abs(h @ mrt_precoder(h)) ** 2 * (1 + 1e-12)


def test_zf_examples(rng):
    h = crandn(rng, 1, 4)
    p = zf_precoders(h)
    np.testing.assert_allclose(p[0], mrt_precoder(h[0]), atol=1e-12)
    p = zf_precoders(np.eye(3))
    np.testing.assert_allclose(p.W, np.eye(3) / np.sqrt(3), atol=1e-15)
    for _ in range(20):
        H = crandn(rng, 2, 4)
        p = zf_precoders(H)
        G = np.abs(H @ p.W)
        assert max(G[0, 1] / G[0, 0], G[1, 0] / G[1, 1]) <= 1e-9
        np.testing.assert_allclose(np.linalg.norm(p.W, axis=0) ** 2, 0.5, rtol=1e-12)
        assert p.total_power == pytest.approx(1.0, rel=1e-12)


def test_zf_errors(rng):
    H = crandn(rng, 1, 4)
    with pytest.raises(RankError) as exc:
        zf_precoders(np.vstack([H, 2 * H]))
    assert exc.value.singular_value < 1e-10
    with pytest.raises(InvalidConfigError):
        zf_precoders(crandn(rng, 3, 2))


def test_received_power(rng):
    h = crandn(rng, 4)
    w = mrt_precoder(h)
    assert received_power(h, w, 0.5) == pytest.approx(0.5 * np.linalg.norm(h) ** 2)
    assert received_power(h, w, 2.0) == pytest.approx(2 * received_power(h, w, 1.0))
    orth = np.array([h[1], -h[0], 0, 0])
    assert received_power(h, orth / np.linalg.norm(orth), 1.0) == pytest.approx(0.0, abs=1e-28)
    assert received_power(3j * h, w, 1.0) == pytest.approx(9 * received_power(h, w, 1.0))
    with pytest.raises(InvalidConfigError):
        received_power(h, 2 * w, 1.0)


def test_sum_rate_single_user(rng):
    h = crandn(rng, 1, 4) * 1e-4
    p = PrecoderSet(mrt_precoder(h[0]))
    expected = np.log(1 + 1e-2 * np.linalg.norm(h) ** 2 / 1e-11)
    assert sum_rate(h, p, 1e-2, 1e-11) == pytest.approx(expected, rel=1e-12)
    assert sum_rate(h, p, 1e-2, 1e-11, bits=True) == pytest.approx(expected / LN2, rel=1e-12)


def test_sum_rate_zero_channel():
    assert sum_rate(np.zeros((2, 4)), PrecoderSet(np.eye(4)[:, :2] / np.sqrt(2)), 1.0, 1e-11) == 0.0


def test_sum_rate_zf_interference_free(rng):
    H = crandn(rng, 2, 4) * 1e-5
    p = zf_precoders(H)
    free = sum(np.log1p(1.0 * abs(H[k] @ p[k]) ** 2 / 1e-11) for k in range(2))
    assert sum_rate(H, p, 1.0, 1e-11) == pytest.approx(free, rel=1e-9)


def test_sum_rate_with_interference_by_hand():
    H = np.array([[1.0, 0.5], [0.2, 1.0]])
    W = np.eye(2) / np.sqrt(2)
    P, s2 = 2.0, 0.1
    g = P * np.abs(H @ W) ** 2
    expected = np.log(1 + g[0, 0] / (g[0, 1] + s2)) + np.log(1 + g[1, 1] / (g[1, 0] + s2))
    assert sum_rate(H, PrecoderSet(W), P, s2) == pytest.approx(expected, rel=1e-14)


def test_sum_rate_monotone_in_power(rng):
    for _ in range(20):
        H = crandn(rng, 2, 4) * 1e-5
        p = PrecoderSet(crandn(rng, 4, 2) / np.sqrt(8))
        rates = [sum_rate(H, p, P, 1e-11) for P in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)]
        assert all(b >= a for a, b in zip(rates, rates[1:]))
        assert rates[0] >= 0


def test_sum_rate_shape_check(rng):
    with pytest.raises(InvalidConfigError):
        sum_rate(crandn(rng, 2, 4), PrecoderSet(crandn(rng, 3, 2)), 1.0, 1.0)


def test_effective_channel_matches_direct(rng):
    for ng in (1, 2, 4, 8):
        s = GroupingStrategy(tuple(rng.permutation(8)), ng)
        t = ScatteringBlocks(random_blocks(s.G, ng, rng, 1)[0])
        H_R, H_T = crandn(rng, 2, 8), crandn(rng, 8, 3)
        np.testing.assert_allclose(effective_channel(s, t, H_R, H_T),
                                   effective_channel_direct(s, t, H_R, H_T), atol=1e-12)
