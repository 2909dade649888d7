"""Block-diagonalization precoding from (quantized or perfect) CSI.

Each user's precoder is an orthonormal basis of the right null space of the
other users' stacked CSI, so inter-user interference vanishes exactly on the
CSI the precoder was computed from; when that CSI is quantized, the residual
interference on the *true* channel is what limited feedback pays for.
Per-user covariance is white: p = n_bs * p_max / (n_users * n_r) per stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig
from .linalg import null_space_basis

__all__ = ["PrecoderSet", "power_allocation", "bd_precoders"]


@dataclass(frozen=True)
class PrecoderSet:
    """Per-user precoders (n_users, n_bs*n_t, n_r) and the per-stream power."""

    w: np.ndarray
    per_stream_power: float


def power_allocation(n_bs: int, n_users: int, n_r: int, p_max: float) -> float:
    """Equal per-stream transmit power: n_bs * p_max / (n_users * n_r)."""
    if min(n_bs, n_users, n_r) < 1 or p_max <= 0:
        raise ValueError("need positive dimensions and power budget")
    return n_bs * p_max / (n_users * n_r)


def bd_precoders(csi, cfg: SystemConfig) -> PrecoderSet:
    """Zero-forcing precoders from a list of per-user CSI matrices.

    ``csi[k]`` is n_r x (n_bs*n_t) (quantized or true).  For each user the
    other users' CSI is stacked and the trailing ``n_r`` right singular
    directions form the precoder.  Raises when some user's null space is too
    small (rank-deficient stacking or over-loaded system).
    """
    k_users = len(csi)
    if k_users != cfg.n_users:
        raise ValueError(f"{k_users} CSI matrices for n_users={cfg.n_users}")
    m = cfg.total_tx_antennas
    w = np.empty((k_users, m, cfg.n_r), dtype=complex)
    for k in range(k_users):
        others = [csi[j] for j in range(k_users) if j != k]
        if others:
            stack = np.vstack(others)
        else:
            stack = np.zeros((0, m), dtype=complex)
        try:
            w[k] = null_space_basis(stack, cfg.n_r)
        except ValueError as exc:
            raise ValueError(
                f"zero-forcing infeasible for user {k}: {exc}"
            ) from exc
    p = power_allocation(cfg.n_bs, cfg.n_users, cfg.n_r, cfg.p_max)
    return PrecoderSet(w=w, per_stream_power=p)
