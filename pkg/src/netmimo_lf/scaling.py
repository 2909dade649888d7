"""Closed-form scaling laws: distortion, throughput loss, and bit budgets.

These are the analytic counterparts the Monte Carlo experiments are checked
against.  Everything is driven by the quantization exponent

    alpha = n_r * (n_bs * n_t - n_r),

the (complex) dimension count of the subspace being quantized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ScalingInputs",
    "DistortionForms",
    "RateScalePair",
    "codebook_distortion",
    "throughput_loss_bound",
    "bits_for_target_loss",
    "interference_limited_rate",
    "normalized_gain_sum",
    "relative_complexity",
]


@dataclass(frozen=True)
class ScalingInputs:
    """Dimensions plus the interference-free operating point.

    ``rho`` is the system SNR p_max / sigma^2; ``g_sum`` the per-user sum of
    large-scale gains normalized by the weakest one (so g_sum >= n_bs).
    """

    n_t: int
    n_bs: int
    n_r: int
    n_users: int
    rho: float
    g_sum: float

    def __post_init__(self):
        if self.rho <= 0 or self.g_sum <= 0:
            raise ValueError("rho and g_sum must be positive")
        if self.n_users < 2:
            raise ValueError("loss scaling concerns multi-user residual interference")

    @property
    def alpha(self) -> int:
        return self.n_r * (self.n_bs * self.n_t - self.n_r)


@dataclass(frozen=True)
class DistortionForms:
    """Simplified and pre-simplification forms of the mean distortion law."""

    simplified: float
    refined: float


def codebook_distortion(total_bits: int, n_t: int, n_bs: int, n_r: int) -> DistortionForms:
    """Mean chordal-squared distortion of a B-bit random codebook.

    ``simplified`` is n_r * 2^(-B/alpha); ``refined`` keeps the
    Gamma(1/alpha)/alpha * beta^(-1/alpha) coefficient the simplification
    replaces by n_r (evaluated in the log domain so large factorials never
    materialize).
    """
    if total_bits < 0:
        raise ValueError("bit budget must be nonnegative")
    m = n_bs * n_t
    if not 0 < n_r < m:
        raise ValueError(f"need 0 < n_r < {m}")
    alpha = n_r * (m - n_r)
    decay = 2.0 ** (-total_bits / alpha)
    ln_beta = -gammaln(alpha + 1)
    for i in range(1, n_r + 1):
        ln_beta += gammaln(m - i + 1) - gammaln(n_r - i + 1)
    coeff = math.exp(gammaln(1.0 / alpha) - math.log(alpha) - ln_beta / alpha)
    return DistortionForms(simplified=n_r * decay, refined=coeff * decay)


def throughput_loss_bound(si: ScalingInputs, total_bits: int) -> float:
    """Predicted per-user rate loss (bits) of quantized vs perfect CSI.

    n_r log2(1 + p Dbar (K-1) g_sum / (N sigma^2)) with the simplified
    distortion law and per-stream power p = N p_max/(K n_r); in terms of rho
    the argument is rho Dbar g_sum (K-1)/(K n_r).
    """
    dbar = codebook_distortion(total_bits, si.n_t, si.n_bs, si.n_r).simplified
    k = si.n_users
    arg = si.rho * dbar * si.g_sum * (k - 1) / (k * si.n_r)
    return si.n_r * math.log2(1.0 + arg)


def bits_for_target_loss(si: ScalingInputs, epsilon: float) -> int:
    """Feedback budget keeping the predicted loss at ``epsilon`` bits.

    B = alpha log2(rho g_sum) - c(eps), c(eps) = alpha log2(2^(eps/n_r) - 1),
    rounded up to the next multiple of n_bs (per-cell budgets are integers)
    and floored at zero.
    """
    if epsilon <= 0:
        raise ValueError("target loss must be positive")
    alpha = si.alpha
    c_eps = alpha * math.log2(2.0 ** (epsilon / si.n_r) - 1.0)
    raw = alpha * math.log2(si.rho * si.g_sum) - c_eps
    if raw <= 0:
        return 0
    # Tolerance keeps float noise at an exact multiple of n_bs from
    # spilling into the next step up.
    return int(math.ceil(raw / si.n_bs - 1e-9) * si.n_bs)


@dataclass(frozen=True)
class RateScalePair:
    """The two published constants for the interference-limited rate order.

    Both are Theta(B / (n_bs n_t)^2) for fixed n_r; they differ only in the
    bookkeeping of the constant (antenna-normalized vs user-normalized).
    """

    by_antennas: float
    by_users: float


def interference_limited_rate(
    total_bits: int, n_t: int, n_bs: int, n_r: int, n_users: int
) -> RateScalePair:
    """High-SNR per-user rate order as a function of the feedback budget."""
    m = n_bs * n_t
    if not 0 < n_r < m or n_users < 2:
        raise ValueError("bad dimensions for the interference-limited regime")
    by_antennas = n_r * total_bits * math.log(2.0) / ((m - n_r) * m)
    by_users = total_bits * math.log(2.0) / ((m - n_r) * (n_users - 1))
    return RateScalePair(by_antennas=by_antennas, by_users=by_users)


def normalized_gain_sum(gains) -> float:
    """Sum of large-scale gains normalized by the weakest (so >= count)."""
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1 or g.size == 0 or np.any(g <= 0):
        raise ValueError("need a nonempty vector of positive gains")
    return float(np.sum(g) / np.min(g))


def relative_complexity(searched_count: int, total_bits: int) -> float:
    """Fraction of the full index product a search actually scored."""
    if searched_count < 1:
        raise ValueError("a search scores at least one tuple")
    return searched_count / 2.0 ** total_bits
