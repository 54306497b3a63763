import numpy as np
import pytest

from bdris.channel import (ChannelRealization, ChannelSampler, CorrelationSpec, TrainingSet,
                           covariance_factor, exponential_corr, load_training_set,
                           load_training_set_csv, path_loss, ris_covariance,
                           sample_realizations, save_training_set, save_training_set_csv,
                           stream_rng)
from bdris.errors import InvalidConfigError, NumericalError
from bdris.model import SystemConfig


def small_cfg(**kw):
    base = dict(N_H=2, N_V=8, M=4, K=1, N_G=4, rho=0.8)
    base.update(kw)
    return SystemConfig(**base)


def test_exponential_corr_examples():
    np.testing.assert_array_equal(exponential_corr(2, 0.6), [[1, 0.6], [0.6, 1]])
    np.testing.assert_array_equal(exponential_corr(3, 0.0), np.eye(3))
    np.testing.assert_allclose(exponential_corr(3, 0.8),
                               [[1, 0.8, 0.64], [0.8, 1, 0.8], [0.64, 0.8, 1]], rtol=1e-15)


@pytest.mark.parametrize("rho", [1.0, -0.2, 1.5])
def test_exponential_corr_rejects(rho):
    with pytest.raises(InvalidConfigError):
        exponential_corr(3, rho)


def test_exponential_corr_positive_definite():
    for rho in (0.0, 0.5, 0.9, 0.99):
        assert np.linalg.eigvalsh(exponential_corr(16, rho)).min() > 0


def test_ris_covariance_examples():
    np.testing.assert_array_equal(ris_covariance(1, 2, 0.7), exponential_corr(2, 0.7))
    R = ris_covariance(2, 2, 0.6)
    RV = exponential_corr(2, 0.6)
    np.testing.assert_array_equal(R[:2, :2], RV)
    np.testing.assert_allclose(R[:2, 2:], 0.6 * RV)
    np.testing.assert_allclose(R[2:, :2], 0.6 * RV)
    np.testing.assert_array_equal(R[2:, 2:], RV)
    np.testing.assert_array_equal(np.diag(ris_covariance(4, 8, 0.8)), 1.0)


def test_ris_covariance_element_indexing():
    # element n sits at (n // N_V, n % N_V)
    N_H, N_V, rho = 3, 4, 0.7
    R = ris_covariance(N_H, N_V, rho)
    for n in range(N_H * N_V):
        for m in range(N_H * N_V):
            dh = abs(n // N_V - m // N_V)
            dv = abs(n % N_V - m % N_V)
            assert R[n, m] == pytest.approx(rho ** (dh + dv), rel=1e-14)


def test_path_loss_values():
    assert path_loss(1.0, 2.8, 1e-3) == 1e-3
    assert path_loss(1.0, 17.0, 1e-3) == 1e-3
    np.testing.assert_allclose(path_loss(np.sqrt(8), 2.8), 1e-3 * 8 ** -1.4, rtol=1e-14)
    assert path_loss(np.sqrt(8), 2.8) == pytest.approx(5.44e-5, rel=2e-3)
    assert path_loss(np.sqrt(2504), 2.0) == pytest.approx(1e-3 / 2504, rel=1e-14)
    assert path_loss(np.sqrt(2504), 2.0) == pytest.approx(3.99e-7, rel=2e-3)
    for d in (0.0, -1.0):
        with pytest.raises(InvalidConfigError):
            path_loss(d, 2.0)


def test_covariance_factor_reconstructs(rng):
    for rho in (0.0, 0.6, 0.8, 0.95):
        R = ris_covariance(8, 8, rho)
        F = covariance_factor(R)
        assert np.linalg.norm(F @ F.conj().T - R) / np.linalg.norm(R) <= 1e-8


def test_covariance_factor_reports_failure():
    with pytest.raises(NumericalError, match="condition"):
        covariance_factor(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_spec_from_config():
    cfg = SystemConfig()
    spec = CorrelationSpec.from_config(cfg)
    assert spec.N == 64 and spec.M == 4
    assert spec.L_R == pytest.approx(1e-3 * 8 ** -1.4)
    assert spec.L_T == pytest.approx(1e-3 / 2504)
    np.testing.assert_array_equal(spec.R_T, np.kron(spec.R_RIS, spec.R_TX))
    np.testing.assert_array_equal(np.diag(spec.R_RIS), 1.0)


def test_realization_validation():
    with pytest.raises(InvalidConfigError):
        ChannelRealization(np.zeros((4, 2)), np.zeros((1, 3)))
    with pytest.raises(InvalidConfigError):
        ChannelRealization(np.full((2, 2), np.nan), np.zeros((1, 2)))
    with pytest.raises(InvalidConfigError):
        TrainingSet((), 0)
    ch = ChannelRealization(np.ones((3, 2)), np.ones(3))
    assert (ch.N, ch.M, ch.K) == (3, 2, 1)


def test_same_seed_bit_identical():
    cfg = small_cfg(K=2, M=2)
    spec = CorrelationSpec.from_config(cfg)
    a = sample_realizations(cfg, spec, 5, seed=11)
    b = sample_realizations(cfg, spec, 5, seed=11)
    c = sample_realizations(cfg, spec, 5, seed=12)
    for x, y in zip(a, b):
        assert x.H_T.tobytes() == y.H_T.tobytes()
        assert x.H_R.tobytes() == y.H_R.tobytes()
    assert a[0].H_T.tobytes() != c[0].H_T.tobytes()


def test_realizations_independent_of_batch_layout():
    cfg = small_cfg()
    spec = CorrelationSpec.from_config(cfg)
    whole = sample_realizations(cfg, spec, 6, seed=3)
    tail = sample_realizations(cfg, spec, 2, seed=3, start=4)
    np.testing.assert_array_equal(whole[4].H_T, tail[0].H_T)
    np.testing.assert_array_equal(whole[5].H_R, tail[1].H_R)


def test_stream_rng_distinct_streams():
    a = stream_rng(1, 0, 0).standard_normal(4)
    b = stream_rng(1, 0, 1).standard_normal(4)
    c = stream_rng(1, 1, 0).standard_normal(4)
    assert not np.allclose(a, b) and not np.allclose(a, c)
    np.testing.assert_array_equal(a, stream_rng(1, 0, 0).standard_normal(4))


def test_spec_config_mismatch():
    with pytest.raises(InvalidConfigError):
        sample_realizations(small_cfg(), CorrelationSpec.from_config(SystemConfig()), 1, 0)


def _draw_many(cfg, n, seed=5):
    sampler = ChannelSampler(CorrelationSpec.from_config(cfg), cfg.K)
    return [sampler.draw(seed, i) for i in range(n)]


def test_h_R_mean_and_covariance():
    cfg = small_cfg(M=1)
    spec = CorrelationSpec.from_config(cfg)
    draws = _draw_many(cfg, 10_000)
    h = np.array([d.h_R for d in draws]) / np.sqrt(spec.L_R)
    mean = h.mean(axis=0)
    # per-entry standard error is 1/sqrt(n) after normalization
    assert np.abs(mean).max() <= 4 / np.sqrt(len(h)) * np.sqrt(2)
    cov = h.T @ h.conj() / len(h)
    assert np.abs(cov - spec.R_RIS).max() <= 0.05


def test_rho_zero_gives_uncorrelated_entries():
    cfg = small_cfg(rho=0.0, M=1)
    spec = CorrelationSpec.from_config(cfg)
    h = np.array([d.h_R for d in _draw_many(cfg, 4000)]) / np.sqrt(spec.L_R)
    cov = h.T @ h.conj() / len(h)
    off = cov - np.diag(np.diag(cov))
    assert np.abs(off).max() <= 5 / np.sqrt(len(h))


def test_H_T_vec_ordering():
    cfg = SystemConfig(N_H=1, N_V=3, M=2, K=1, N_G=1, rho=0.7)
    spec = CorrelationSpec.from_config(cfg)
    H = np.array([d.H_T for d in _draw_many(cfg, 20_000)]) / np.sqrt(spec.L_T)
    row = H.reshape(len(H), -1)                       # row-major vec
    col = H.transpose(0, 2, 1).reshape(len(H), -1)    # column-major vec
    cov_row = row.T @ row.conj() / len(H)
    cov_col = col.T @ col.conj() / len(H)
    target_row = np.kron(spec.R_RIS, spec.R_TX)
    target_col = np.kron(spec.R_TX, spec.R_RIS)
    assert np.abs(cov_row - target_row).max() <= 0.05
    assert np.abs(cov_col - target_col).max() <= 0.05
    # the two conventions are genuinely different for this shape
    assert np.abs(target_row - target_col).max() > 0.3
    assert np.abs(cov_row - target_col).max() > 0.3


def test_binary_and_csv_roundtrip(tmp_path):
    cfg = small_cfg(K=2, M=3)
    ts = sample_realizations(cfg, CorrelationSpec.from_config(cfg), 3, seed=2**63 + 5)
    save_training_set(ts, tmp_path / "t.bin")
    save_training_set_csv(ts, tmp_path / "t.csv")
    for loaded in (load_training_set(tmp_path / "t.bin"), load_training_set_csv(tmp_path / "t.csv")):
        assert loaded.seed == ts.seed and len(loaded) == 3
        for x, y in zip(ts, loaded):
            assert x.H_T.tobytes() == y.H_T.tobytes()
            assert x.H_R.tobytes() == y.H_R.tobytes()
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == f"# N=16,M=3,K=2,C=3,seed={2**63 + 5}"


def test_binary_rejects_garbage(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"\0" * 64)
    with pytest.raises(InvalidConfigError):
        load_training_set(p)
