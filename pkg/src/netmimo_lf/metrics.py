"""Per-user rate and distortion metrics.

Rates are Shannon log-dets on the *true* channel: the perfect-CSI rate
ignores interference (block diagonalization nulls it exactly when precoders
are built from the same CSI), while the limited-feedback rate whitens
against the residual inter-user interference the quantized precoders leak.
"""

from __future__ import annotations

import numpy as np

from .codebook import chordal_distance
from .linalg import complex_gaussian, log_det_hermitian_psd

__all__ = [
    "IllConditionedSample",
    "rate_csit",
    "rate_lf",
    "distortion_sample",
    "block_norm_concentration",
]

_COND_LIMIT = 1e12


class IllConditionedSample(RuntimeError):
    """Raised when a rate sample's noise-plus-interference matrix is numerically
    unusable (condition number beyond 1e12); callers exclude and count these."""


def rate_csit(h: np.ndarray, w: np.ndarray, p: float, noise_power: float) -> float:
    """Interference-free rate log2 det(I + (p/sigma^2) H W W^H H^H)."""
    hw = np.asarray(h) @ np.asarray(w)
    n_r = hw.shape[0]
    m = np.eye(n_r) + (p / noise_power) * (hw @ hw.conj().T)
    return log_det_hermitian_psd(m)


def rate_lf(h: np.ndarray, w_all: np.ndarray, k: int, p: float, noise_power: float) -> float:
    """Rate of user ``k`` under residual interference from the other precoders.

    log2 det(R + p S S^H) - log2 det(R) with S = H_k W_k and
    R = sigma^2 I + p sum_{j != k} (H_k W_j)(H_k W_j)^H.  Samples whose R is
    ill conditioned raise :class:`IllConditionedSample`.
    """
    h = np.asarray(h)
    n_r = h.shape[0]
    r = noise_power * np.eye(n_r, dtype=complex)
    for j in range(w_all.shape[0]):
        if j == k:
            continue
        hw = h @ w_all[j]
        r = r + p * (hw @ hw.conj().T)
    if np.linalg.cond(r) > _COND_LIMIT:
        raise IllConditionedSample(
            f"noise-plus-interference matrix for user {k} has condition number > {_COND_LIMIT:.0e}"
        )
    s = h @ w_all[k]
    total = r + p * (s @ s.conj().T)
    return log_det_hermitian_psd(total) - log_det_hermitian_psd(r)


def distortion_sample(v_w: np.ndarray, v_hat_w: np.ndarray) -> float:
    """Squared chordal distance between source and reconstructed direction."""
    return chordal_distance(v_w, v_hat_w) ** 2


def block_norm_concentration(
    n_t: int, n_bs: int, eps: float, samples: int, rng: np.random.Generator
):
    """Empirical check that per-BS sub-blocks of a random direction carry 1/N
    of the energy each.

    Draws unit-normalized CN(0,1) vectors of length ``n_bs * n_t``, measures
    how often *any* per-BS block's squared norm deviates from 1/n_bs by more
    than ``eps``, and returns ``(exceedance, chebyshev_bound)`` where the
    bound is the single-block Chebyshev bound
    (N-1) / (N^2 (N n_t + 1) eps^2).
    """
    if eps <= 0 or samples < 1:
        raise ValueError("need positive eps and at least one sample")
    m = n_bs * n_t
    h = complex_gaussian(rng, (samples, m))
    energy = np.abs(h) ** 2
    total = np.sum(energy, axis=1, keepdims=True)
    block = energy.reshape(samples, n_bs, n_t).sum(axis=2) / total
    dev = np.abs(block - 1.0 / n_bs)
    exceed = float(np.mean(np.any(dev > eps, axis=1)))
    var = (n_bs - 1) / (n_bs ** 2 * (n_bs * n_t + 1))
    return exceed, var / eps ** 2
