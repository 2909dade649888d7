"""Givens-rotation baseline: parameter extraction, budgets, reconstruction."""

import numpy as np
import pytest

from netmimo_lf.codebook import build_percell_codebooks, chordal_distance
from netmimo_lf.feedback import search_exhaustive
from netmimo_lf.givens import (
    GivensCode,
    budget_allocation,
    givens_decode,
    givens_encode,
    givens_encode_budget,
    pair_count,
)
from netmimo_lf.linalg import frobenius, haar_orthonormal

RNG = np.random.default_rng(717)


@pytest.mark.parametrize("m,n,want", [(4, 2, 5), (12, 2, 21), (4, 4, 6), (2, 1, 1)])
def test_pair_count(m, n, want):
    assert pair_count(m, n) == want


def test_identity_source_gives_zero_angles():
    code = givens_encode(np.eye(4)[:, :2])
    for theta, phi in code.pairs:
        assert theta == 0.0 and phi == 0.0
    np.testing.assert_allclose(givens_decode(code), np.eye(4)[:, :2], atol=1e-15)


def test_raw_mode_round_trip():
    for m, n in [(4, 2), (12, 2), (6, 3)]:
        for _ in range(25):
            v = haar_orthonormal(m, n, RNG)
            back = givens_decode(givens_encode(v))
            # equality up to per-column phase, which the subspace metric ignores
            assert chordal_distance(back, v) <= 1e-7
            assert frobenius(back.conj().T @ back - np.eye(n)) <= 1e-10


def test_decode_always_orthonormal():
    code = givens_encode_budget(haar_orthonormal(12, 2, RNG), 4)
    back = givens_decode(code)
    assert frobenius(back.conj().T @ back - np.eye(2)) <= 1e-10


def test_distortion_shrinks_with_resolution():
    sources = [haar_orthonormal(4, 2, RNG) for _ in range(100)]

    def mean_d(tb, pb):
        return float(
            np.mean(
                [chordal_distance(givens_decode(givens_encode(v, tb, pb)), v) for v in sources]
            )
        )

    coarse, mid, fine = mean_d(1, 1), mean_d(3, 3), mean_d(6, 6)
    assert coarse > mid > fine
    assert fine < 0.05


def test_budget_allocation():
    assert budget_allocation(12, 5) == [(2, 1), (2, 1), (1, 1), (1, 1), (1, 1)]
    assert budget_allocation(10, 5) == [(1, 1)] * 5
    alloc = budget_allocation(7, 3)
    assert sum(tb + pb for tb, pb in alloc) == 7
    assert all(tb >= pb for tb, pb in alloc)  # odd pair budget favors theta


def test_total_bits_property():
    code = givens_encode_budget(haar_orthonormal(12, 2, RNG), 24)
    assert code.total_bits == 24
    raw = givens_encode(haar_orthonormal(4, 2, RNG))
    assert raw.total_bits == 0


def test_code_validation():
    with pytest.raises(ValueError, match="rotation pairs"):
        GivensCode(rows=4, cols=2, pairs=((0, 0),), pair_bits=((1, 1),))
    with pytest.raises(ValueError, match="out of range"):
        GivensCode(rows=2, cols=1, pairs=((4, 0),), pair_bits=((1, 1),))
    with pytest.raises(ValueError, match="tall orthonormal"):
        givens_encode(haar_orthonormal(4, 2, RNG).T)


def test_product_codebook_beats_givens_at_matched_budget():
    """At 12 aggregate bits the joint product search quantizes markedly better.

    The rotation chain spreads 12 bits over 21 (theta, phi) pairs and starves
    each one, while the tuple search spends the same budget on the aggregate
    subspace directly.
    """
    rng = np.random.default_rng(99)
    books = build_percell_codebooks([4, 4, 4], 4, 2, rng)
    d_cb, d_gv = [], []
    for _ in range(150):
        agg = haar_orthonormal(12, 2, RNG)
        report = search_exhaustive(agg, books, 4)
        d_cb.append(report.distance ** 2)
        code = givens_encode_budget(agg, 12)
        d_gv.append(chordal_distance(givens_decode(code), agg) ** 2)
    assert np.mean(d_cb) < 0.8 * np.mean(d_gv)
