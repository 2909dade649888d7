"""Rate and distortion metrics."""

from dataclasses import replace

import numpy as np
import pytest

from netmimo_lf.channel import SystemConfig, drop_users, realize_channel, snr_calibration
from netmimo_lf.codebook import build_percell_codebooks
from netmimo_lf.feedback import normalize_and_decompose, reconstruct, search_exhaustive
from netmimo_lf.linalg import haar_orthonormal
from netmimo_lf.metrics import (
    IllConditionedSample,
    block_norm_concentration,
    distortion_sample,
    rate_csit,
    rate_lf,
)
from netmimo_lf.precoding import bd_precoders

RNG = np.random.default_rng(31337)


def test_rate_csit_zero_channel():
    assert rate_csit(np.zeros((2, 12)), np.zeros((12, 2)), 1.0, 1.0) == 0.0


def test_rate_csit_scalar_oracle():
    # 1x1 "MIMO": log2(1 + p |hw|^2 / sigma^2)
    h = np.array([[2.0 + 0j]])
    w = np.array([[1.0 + 0j]])
    assert rate_csit(h, w, 0.75, 1.0) == pytest.approx(np.log2(1 + 3.0))


def test_rate_csit_eigenvalue_oracle():
    for _ in range(25):
        h = RNG.normal(size=(2, 12)) + 1j * RNG.normal(size=(2, 12))
        w = haar_orthonormal(12, 2, RNG)
        p, noise = 0.25, 0.5
        sv = np.linalg.svd(h @ w, compute_uv=False)
        want = float(np.sum(np.log2(1 + (p / noise) * sv ** 2)))
        assert rate_csit(h, w, p, noise) == pytest.approx(want, rel=1e-10)


def test_rate_csit_left_unitary_invariant():
    h = RNG.normal(size=(2, 12)) + 1j * RNG.normal(size=(2, 12))
    w = haar_orthonormal(12, 2, RNG)
    u = haar_orthonormal(2, 2, RNG)
    assert rate_csit(u @ h, w, 1.0, 1.0) == pytest.approx(rate_csit(h, w, 1.0, 1.0))


def test_rate_lf_no_interference_matches_csit():
    h = RNG.normal(size=(2, 12)) + 1j * RNG.normal(size=(2, 12))
    w_all = np.zeros((6, 12, 2), dtype=complex)
    w_all[2] = haar_orthonormal(12, 2, RNG)
    got = rate_lf(h, w_all, 2, 0.25, 1.0)
    assert got == pytest.approx(rate_csit(h, w_all[2], 0.25, 1.0), abs=1e-9)


def test_rate_lf_determinant_lemma_oracle():
    """log det(R + pSS^H) - log det(R) == log det(I + p S^H R^-1 S)."""
    for _ in range(25):
        h = RNG.normal(size=(2, 8)) + 1j * RNG.normal(size=(2, 8))
        w_all = np.stack([haar_orthonormal(8, 2, RNG) for _ in range(4)])
        p, noise = 0.5, 0.3
        r = noise * np.eye(2, dtype=complex)
        for j in range(4):
            if j == 1:
                continue
            hw = h @ w_all[j]
            r += p * (hw @ hw.conj().T)
        s = h @ w_all[1]
        inner = np.eye(2) + p * (s.conj().T @ np.linalg.inv(r) @ s)
        want = float(np.linalg.slogdet(inner)[1] / np.log(2))
        assert rate_lf(h, w_all, 1, p, noise) == pytest.approx(want, rel=1e-9)


def test_rate_lf_interference_strictly_hurts():
    h = RNG.normal(size=(2, 12)) + 1j * RNG.normal(size=(2, 12))
    w_all = np.stack([haar_orthonormal(12, 2, RNG) for _ in range(6)])
    clean = np.zeros_like(w_all)
    clean[0] = w_all[0]
    assert rate_lf(h, w_all, 0, 1.0, 1.0) < rate_lf(h, clean, 0, 1.0, 1.0)


def test_rate_lf_noise_dominance():
    h = RNG.normal(size=(2, 12)) + 1j * RNG.normal(size=(2, 12))
    w_all = np.stack([haar_orthonormal(12, 2, RNG) for _ in range(6)])
    assert rate_lf(h, w_all, 0, 1.0, 1e12) < 1e-9


def test_rate_lf_ill_conditioned_raises():
    h = np.zeros((2, 4), dtype=complex)
    h[0, 0] = 1.0  # rank-1 channel: interference fills only one dimension
    w_all = np.zeros((2, 4, 2), dtype=complex)
    w_all[1] = np.eye(4)[:, :2]
    with pytest.raises(IllConditionedSample, match="user 0"):
        rate_lf(h, w_all, 0, 1.0, 1e-14)


def test_distortion_sample_extremes():
    v = haar_orthonormal(4, 2, RNG)
    assert distortion_sample(v, v) == 0.0
    v1 = np.eye(4)[:, :2]
    v2 = np.eye(4)[:, 2:]
    assert distortion_sample(v1, v2) == pytest.approx(2.0)  # n_r for disjoint spans


def test_quantized_rate_below_perfect_csi_in_mean():
    """Paired comparison over channel draws: feedback can only lose throughput."""
    cfg = SystemConfig()
    # physical pathloss needs calibrated power, else both rates sit at ~1e-10
    cfg = replace(cfg, p_max=snr_calibration(cfg, 10.0))
    books = build_percell_codebooks(cfg.bits_per_cell, cfg.n_t, cfg.n_r, np.random.default_rng(5))
    diffs = []
    for seed in range(50):
        rng = np.random.default_rng(9_000 + seed)
        rlz = realize_channel(cfg, drop_users(cfg, rng), rng)
        true_csi, quant_csi, sources = [], [], []
        for k in range(cfg.n_users):
            v_w, _ = normalize_and_decompose(rlz, k, cfg.n_t)
            sources.append(v_w)
            true_csi.append(rlz.h[k])
            rep = search_exhaustive(v_w, books, cfg.n_t)
            quant_csi.append(reconstruct(rep, books, rlz, k).h_hat)
        perfect = bd_precoders(true_csi, cfg)
        limited = bd_precoders(quant_csi, cfg)
        for k in range(cfg.n_users):
            r_csit = rate_csit(rlz.h[k], perfect.w[k], perfect.per_stream_power, cfg.noise_power)
            r_lf = rate_lf(rlz.h[k], limited.w, k, limited.per_stream_power, cfg.noise_power)
            diffs.append(r_csit - r_lf)
    diffs = np.asarray(diffs)
    mean = float(np.mean(diffs))
    half_ci = 1.96 * float(np.std(diffs, ddof=1)) / np.sqrt(diffs.size)
    assert mean - half_ci > 0.0, f"mean gap {mean:.4f} +- {half_ci:.4f} not positive"


def test_block_concentration_single_bs_never_deviates():
    exceed, bound = block_norm_concentration(4, 1, 0.01, 500, np.random.default_rng(1))
    assert exceed == 0.0
    assert bound == 0.0


def test_block_concentration_bound_literals():
    # (N-1) / (N^2 (N n_t + 1) eps^2), worked by hand
    _, b1 = block_norm_concentration(4, 3, 0.1, 10, np.random.default_rng(2))
    assert b1 == pytest.approx(2 / (9 * 13 * 0.01))
    _, b2 = block_norm_concentration(8, 3, 0.2, 10, np.random.default_rng(3))
    assert b2 == pytest.approx(2.0 / 9.0 / 25.0 / 0.04)


def test_block_concentration_empirical_within_bound():
    rng = np.random.default_rng(4)
    exceed, bound = block_norm_concentration(8, 3, 0.15, 20_000, rng)
    se = np.sqrt(max(exceed * (1 - exceed), 1 / 20_000) / 20_000)
    assert exceed <= min(bound, 1.0) + 3 * se
    # large tolerance is essentially never exceeded
    tight, _ = block_norm_concentration(8, 3, 0.45, 20_000, rng)
    assert tight < 0.01


def test_block_concentration_validation():
    with pytest.raises(ValueError):
        block_norm_concentration(4, 3, 0.0, 100, np.random.default_rng(0))
    with pytest.raises(ValueError):
        block_norm_concentration(4, 3, 0.1, 0, np.random.default_rng(0))
