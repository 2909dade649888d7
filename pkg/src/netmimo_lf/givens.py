"""Sequential Givens-rotation parameterization baseline.

An m x n orthonormal matrix is reduced column-major to [I_n; 0]: for column
j, a column phase (immaterial to the spanned subspace, hence not encoded)
makes the diagonal entry real nonnegative, and then each row i = j+1..m-1 is
zeroed by the pair

    phi in [0, 2pi)  -- row phase making entry (i, j) real nonnegative,
    theta in [0, pi/2] -- real rotation of rows (j, i) zeroing entry (i, j).

Decoding replays the inverses in exact reverse order, so at infinite
resolution the decoded matrix spans the source subspace exactly (equal up to
per-column phases).  Quantization snaps each parameter to a uniform grid
(theta over [0, pi/2], phi over [0, 2pi)) with midpoint reconstruction.

This is the classical feedback competitor the per-cell product codebook is
measured against: the parameter count adapts to the aggregate dimension, but
at the budgets studied here each rotation gets very few bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import atan2, cos, pi, sin

import numpy as np

__all__ = ["GivensCode", "givens_encode", "givens_encode_budget", "givens_decode", "pair_count"]


@dataclass(frozen=True)
class GivensCode:
    """Quantized rotation parameters of one source matrix.

    ``pairs`` holds either grid indices ``(theta_idx, phi_idx)`` or, when the
    matching entry of ``pair_bits`` is ``None``, raw ``(theta, phi)`` floats
    (unquantized reference mode).  ``pair_bits`` holds per-pair
    ``(theta_bits, phi_bits)``; budgets may differ across pairs when a pooled
    budget is split with a remainder.
    """

    rows: int
    cols: int
    pairs: tuple
    pair_bits: tuple

    def __post_init__(self):
        expected = pair_count(self.rows, self.cols)
        if len(self.pairs) != expected or len(self.pair_bits) != expected:
            raise ValueError(
                f"{self.rows}x{self.cols} source needs {expected} rotation pairs"
            )
        for (a, b), bits in zip(self.pairs, self.pair_bits):
            if bits is None:
                continue
            tb, pb = bits
            if not (0 <= a < 2 ** tb and 0 <= b < 2 ** pb):
                raise ValueError("quantized index out of range for its bit width")

    @property
    def total_bits(self) -> int:
        return sum(tb + pb for bits in self.pair_bits if bits is not None for tb, pb in [bits])


def pair_count(rows: int, cols: int) -> int:
    """Number of (theta, phi) rotation pairs for an rows x cols source."""
    return sum(rows - 1 - j for j in range(cols))


def _extract_parameters(v: np.ndarray):
    """Column-major reduction of ``v`` to [I; 0]; returns raw (theta, phi)."""
    a = np.array(v, dtype=complex, copy=True)
    m, n = a.shape
    params = []
    for j in range(n):
        pivot = a[j, j]
        if abs(pivot) > 0:
            a[:, j] *= np.conj(pivot / abs(pivot))
        for i in range(j + 1, m):
            entry = a[i, j]
            phi = float(np.angle(entry)) % (2 * pi)
            if abs(entry) > 0:
                a[i, :] *= np.exp(-1j * phi)
            theta = atan2(abs(entry), a[j, j].real)
            c, s = cos(theta), sin(theta)
            row_j = c * a[j, :] + s * a[i, :]
            row_i = -s * a[j, :] + c * a[i, :]
            a[j, :], a[i, :] = row_j, row_i
            params.append((theta, phi))
    return params


def _quantize_pair(theta: float, phi: float, theta_bits: int, phi_bits: int):
    t_cells = 2 ** theta_bits
    p_cells = 2 ** phi_bits
    t_idx = min(int(theta / (pi / 2) * t_cells), t_cells - 1)
    p_idx = min(int(phi / (2 * pi) * p_cells), p_cells - 1)
    return t_idx, p_idx


def _pair_values(pair, bits):
    if bits is None:
        return pair
    t_idx, p_idx = pair
    tb, pb = bits
    theta = (t_idx + 0.5) * (pi / 2) / 2 ** tb
    phi = (p_idx + 0.5) * (2 * pi) / 2 ** pb
    return theta, phi


def givens_encode(v: np.ndarray, theta_bits=None, phi_bits=None) -> GivensCode:
    """Encode ``v`` with a uniform per-pair bit width.

    With both widths ``None`` the raw angles are stored (infinite-resolution
    reference); otherwise every pair is quantized to
    ``(theta_bits, phi_bits)``.
    """
    v = np.asarray(v, dtype=complex)
    if v.ndim != 2 or v.shape[0] < v.shape[1]:
        raise ValueError(f"source must be tall orthonormal, got shape {v.shape}")
    params = _extract_parameters(v)
    if theta_bits is None and phi_bits is None:
        return GivensCode(
            rows=v.shape[0],
            cols=v.shape[1],
            pairs=tuple(params),
            pair_bits=(None,) * len(params),
        )
    tb = int(theta_bits or 0)
    pb = int(phi_bits or 0)
    pairs = tuple(_quantize_pair(t, p, tb, pb) for t, p in params)
    return GivensCode(
        rows=v.shape[0], cols=v.shape[1], pairs=pairs, pair_bits=((tb, pb),) * len(params)
    )


def budget_allocation(total_bits: int, n_pairs: int):
    """Split a pooled budget over rotation pairs.

    Evenly, remainder to the earliest pairs; within a pair theta takes the
    extra bit when the pair total is odd.
    """
    per_pair = [total_bits // n_pairs] * n_pairs
    for i in range(total_bits % n_pairs):
        per_pair[i] += 1
    out = []
    for b in per_pair:
        tb = (b + 1) // 2
        out.append((tb, b - tb))
    return out


def givens_encode_budget(v: np.ndarray, total_bits: int) -> GivensCode:
    """Encode ``v`` under a pooled bit budget (see :func:`budget_allocation`)."""
    v = np.asarray(v, dtype=complex)
    params = _extract_parameters(v)
    alloc = budget_allocation(int(total_bits), len(params))
    pairs = tuple(
        _quantize_pair(t, p, tb, pb) for (t, p), (tb, pb) in zip(params, alloc)
    )
    return GivensCode(rows=v.shape[0], cols=v.shape[1], pairs=pairs, pair_bits=tuple(alloc))


def givens_decode(code: GivensCode) -> np.ndarray:
    """Rebuild the orthonormal matrix from (possibly quantized) parameters."""
    m, n = code.rows, code.cols
    a = np.zeros((m, n), dtype=complex)
    a[:n, :n] = np.eye(n)
    order = []
    for j in range(n):
        for i in range(j + 1, m):
            order.append((j, i))
    for (j, i), pair, bits in zip(
        reversed(order), reversed(code.pairs), reversed(code.pair_bits)
    ):
        theta, phi = _pair_values(pair, bits)
        c, s = cos(theta), sin(theta)
        row_j = c * a[j, :] - s * a[i, :]
        row_i = s * a[j, :] + c * a[i, :]
        a[j, :], a[i, :] = row_j, row_i
        a[i, :] *= np.exp(1j * phi)
    return a
