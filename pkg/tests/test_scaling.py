"""Closed-form scaling laws, pinned against independently derived values."""

import math

import numpy as np
import pytest

from netmimo_lf.scaling import (
    ScalingInputs,
    bits_for_target_loss,
    codebook_distortion,
    interference_limited_rate,
    normalized_gain_sum,
    relative_complexity,
    throughput_loss_bound,
)


def _si(**kw):
    base = dict(n_t=4, n_bs=3, n_r=2, n_users=6, rho=1.0, g_sum=3.0)
    base.update(kw)
    return ScalingInputs(**base)


def test_alpha():
    assert _si().alpha == 20
    assert _si(n_t=8).alpha == 44


def test_simplified_distortion_spot_value():
    # 2 * 2^(-12/20), evaluated independently
    d = codebook_distortion(12, 4, 3, 2)
    assert d.simplified == pytest.approx(1.3195079108, abs=1e-9)
    assert codebook_distortion(0, 4, 3, 2).simplified == 2.0


def test_simplified_distortion_halves_every_alpha_bits():
    d0 = codebook_distortion(10, 4, 3, 2).simplified
    d1 = codebook_distortion(30, 4, 3, 2).simplified
    assert d1 == pytest.approx(d0 / 2)


def test_refined_coefficient_ratio():
    """The Gamma-function coefficient replaces n_r; at (8,3,2) the refined
    form sits at 87.6% of the simplified one, independent of B."""
    for bits in (0, 24, 80):
        d = codebook_distortion(bits, 8, 3, 2)
        assert d.refined / d.simplified == pytest.approx(0.8761, abs=5e-4)
    # the simplification is an upper bound in every configuration tried
    for n_t, n_bs, n_r in [(4, 3, 2), (8, 3, 2), (2, 2, 1), (4, 7, 3)]:
        d = codebook_distortion(16, n_t, n_bs, n_r)
        assert 0.5 < d.refined / d.simplified < 1.0


def test_refined_form_stays_finite_at_large_dimension():
    d = codebook_distortion(200, 16, 7, 4)
    assert math.isfinite(d.refined) and d.refined > 0


def test_distortion_validation():
    with pytest.raises(ValueError):
        codebook_distortion(-1, 4, 3, 2)
    with pytest.raises(ValueError):
        codebook_distortion(8, 4, 3, 12)


def test_loss_bound_monotone_and_zero_limit():
    si = _si(rho=100.0)
    losses = [throughput_loss_bound(si, b) for b in (0, 10, 20, 40, 80, 320)]
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 0.05
    # closed form reproduced by hand for one point
    dbar = 2 * 2 ** (-20 / 20)
    want = 2 * math.log2(1 + 100 * dbar * 3.0 * 5 / (6 * 2))
    assert throughput_loss_bound(si, 20) == pytest.approx(want)


def test_bits_for_target_loss_spot_values():
    # c(1) = 20 log2(2^0.5 - 1) = -25.431066..., so at rho*g = 1 the raw
    # budget is 25.43 -> 27 after rounding up to a multiple of 3
    si = _si(rho=1.0, g_sum=1.0)
    assert bits_for_target_loss(si, 1.0) == 27
    si10 = _si(rho=2.0 ** 10, g_sum=1.0)
    assert bits_for_target_loss(si10, 1.0) == 228  # 200 + 25.43 -> ceil -> 228


def test_bits_budget_multiple_of_cells_and_floor():
    for log2_rg in np.linspace(1, 30, 40):
        si = _si(rho=2.0 ** log2_rg, g_sum=1.0)
        assert bits_for_target_loss(si, 1.0) % 3 == 0
    tiny = _si(rho=1e-9, g_sum=1.0)
    assert bits_for_target_loss(tiny, 1.0) == 0
    with pytest.raises(ValueError):
        bits_for_target_loss(_si(), 0.0)


def test_bits_budget_keeps_loss_under_target():
    for log2_rg in np.linspace(2, 40, 20):
        si = _si(rho=2.0 ** log2_rg, g_sum=1.0)
        bits = bits_for_target_loss(si, 1.0)
        assert throughput_loss_bound(si, bits) <= 1.0 + 1e-9


def test_interference_limited_rate_constants():
    pair = interference_limited_rate(120, 4, 3, 2, 6)
    assert pair.by_antennas == pytest.approx(2 * 120 * math.log(2) / (10 * 12))
    assert pair.by_users == pytest.approx(120 * math.log(2) / (10 * 5))
    # both scale linearly in B
    double = interference_limited_rate(240, 4, 3, 2, 6)
    assert double.by_antennas == pytest.approx(2 * pair.by_antennas)
    assert double.by_users == pytest.approx(2 * pair.by_users)


def test_antenna_doubling_ratio_exact():
    """Doubling n_t from 4 to 8 multiplies the bits needed for a fixed loss
    by alpha'/alpha = 44/20; over the extra log2 term the published grid
    point works out to exactly 528/120."""
    a1 = ScalingInputs(n_t=4, n_bs=3, n_r=2, n_users=6, rho=2.0 ** 6, g_sum=1.0).alpha
    a2 = ScalingInputs(n_t=8, n_bs=3, n_r=2, n_users=6, rho=2.0 ** 6, g_sum=1.0).alpha
    assert (a2 * 12) / (a1 * 6) == pytest.approx(4.4)


def test_normalized_gain_sum():
    assert normalized_gain_sum([2.0, 2.0, 2.0]) == 3.0
    assert normalized_gain_sum([1.0, 3.0, 6.0]) == 10.0
    with pytest.raises(ValueError):
        normalized_gain_sum([1.0, -1.0])
    with pytest.raises(ValueError):
        normalized_gain_sum([])


def test_relative_complexity():
    assert relative_complexity(4096, 12) == 1.0
    assert relative_complexity(1, 12) == pytest.approx(2.0 ** -12)
    with pytest.raises(ValueError):
        relative_complexity(0, 12)


def test_validation_of_inputs_dataclass():
    with pytest.raises(ValueError):
        _si(rho=0.0)
    with pytest.raises(ValueError):
        _si(n_users=1)
