"""System configuration, cell geometry, and channel realization.

The deployment is a cluster of ``n_bs`` adjacent hexagonal cells (circumradius
``cell_radius_m``), one base station at each cell center, jointly serving
``n_users`` terminals dropped uniformly over the union of the cells with a
minimum BS exclusion distance.  Each user sees an aggregate channel

    H_k = H_k^w  G_k,

where ``H_k^w`` is n_r x (n_bs * n_t) IID CN(0,1) small-scale fading and
``G_k`` is block-constant diagonal: sqrt(path gain x lognormal shadowing) of
the serving BS, repeated over that BS's ``n_t`` antenna columns.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import complex_gaussian

__all__ = [
    "SystemConfig",
    "ChannelRealization",
    "cell_sites",
    "point_in_cell",
    "drop_users",
    "path_loss_db",
    "realize_channel",
    "snr_calibration",
    "realization_digest",
]

# Axial-coordinate step directions for walking the hexagonal lattice ring by
# ring; consecutive ring sites are mutually adjacent cells.
_AXIAL_DIRECTIONS = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]


@dataclass
class SystemConfig:
    """Static system parameters shared by every experiment stage.

    ``bits_per_cell`` is the per-BS feedback budget (one entry per cell, same
    for every user); ``delta`` the per-cell search radius used by the
    restricted index search, defaulting to the chordal-distance maximum
    sqrt(n_r) (which makes the restricted search identical to exhaustive).
    """

    n_t: int = 4
    n_bs: int = 3
    n_r: int = 2
    n_users: int = 6
    p_max: float = 1.0
    noise_power: float = 1.0
    cell_radius_m: float = 300.0
    min_bs_distance_m: float = 35.0
    shadowing_std_db: float = 8.0
    pathloss_intercept_db: float = 130.19
    pathloss_slope: float = 37.6
    bits_per_cell: list = field(default_factory=lambda: [4, 4, 4])
    delta: list = field(default_factory=list)
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if min(self.n_t, self.n_bs, self.n_r, self.n_users) < 1:
            raise ValueError("system dimensions must be positive")
        if self.n_r > self.n_t:
            raise ValueError(
                f"n_r={self.n_r} streams per user exceed n_t={self.n_t} antennas per BS"
            )
        if self.n_users * self.n_r > self.n_bs * self.n_t:
            raise ValueError(
                f"total streams {self.n_users * self.n_r} exceed total antennas "
                f"{self.n_bs * self.n_t}; zero-forcing is infeasible"
            )
        if self.p_max <= 0 or self.noise_power <= 0:
            raise ValueError("p_max and noise_power must be positive")
        if self.cell_radius_m <= 0 or self.min_bs_distance_m < 0:
            raise ValueError("bad geometry: radius must be positive, exclusion nonnegative")
        if self.min_bs_distance_m >= self.cell_radius_m:
            raise ValueError("BS exclusion radius must be below the cell radius")
        if len(self.bits_per_cell) != self.n_bs:
            raise ValueError(
                f"bits_per_cell has {len(self.bits_per_cell)} entries, expected n_bs={self.n_bs}"
            )
        if any((int(b) != b or b < 0) for b in self.bits_per_cell):
            raise ValueError("bits_per_cell entries must be nonnegative integers")
        self.bits_per_cell = [int(b) for b in self.bits_per_cell]
        if not self.delta:
            self.delta = [math.sqrt(self.n_r)] * self.n_bs
        if len(self.delta) != self.n_bs:
            raise ValueError(
                f"delta has {len(self.delta)} entries, expected n_bs={self.n_bs}"
            )
        dmax = math.sqrt(self.n_r) + 1e-12
        if any(not (0 < d <= dmax) for d in self.delta):
            raise ValueError(
                f"search radii must lie in (0, sqrt(n_r)={math.sqrt(self.n_r):.4f}]"
            )
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    @property
    def total_tx_antennas(self) -> int:
        return self.n_bs * self.n_t

    @property
    def total_bits(self) -> int:
        return int(sum(self.bits_per_cell))


@dataclass(frozen=True)
class ChannelRealization:
    """One drop: aggregate channels plus the large-scale factors behind them.

    ``h`` is (n_users, n_r, n_bs*n_t); ``g_diag`` the diagonal of G_k per user
    (block constant over each BS's antenna columns); ``pathloss_lin`` and
    ``shadow_lin`` the per-(user, BS) linear-scale path gain and shadowing.
    """

    h: np.ndarray
    g_diag: np.ndarray
    pathloss_lin: np.ndarray
    shadow_lin: np.ndarray
    user_positions: np.ndarray


def _axial_ring(k: int):
    """Axial coordinates of lattice ring ``k`` in adjacency order."""
    q, r = (0, -k)
    for side in range(6):
        for _ in range(k):
            yield (q, r)
            dq, dr = _AXIAL_DIRECTIONS[side]
            q, r = q + dq, r + dr


def cell_sites(n_bs: int, cell_radius_m: float) -> np.ndarray:
    """BS positions: centers of ``n_bs`` mutually adjacent hexagons.

    Sites come from the hexagonal lattice in spiral order (center cell first,
    then ring by ring), so n_bs=3 gives the classic three-cell cluster where
    every pair of cells shares an edge.  Adjacent centers are sqrt(3) x
    circumradius apart.
    """
    coords = [(0, 0)]
    k = 1
    while len(coords) < n_bs:
        for qr in _axial_ring(k):
            coords.append(qr)
            if len(coords) == n_bs:
                break
        k += 1
    sites = np.empty((n_bs, 2))
    for i, (q, r) in enumerate(coords):
        sites[i, 0] = math.sqrt(3.0) * cell_radius_m * (q + r / 2.0)
        sites[i, 1] = 1.5 * cell_radius_m * r
    return sites


def point_in_cell(point, center, cell_radius_m: float) -> bool:
    """Membership test for a pointy-top hexagon of given circumradius."""
    x = abs(point[0] - center[0])
    y = abs(point[1] - center[1])
    if x > math.sqrt(3.0) / 2.0 * cell_radius_m + 1e-9:
        return False
    return y <= cell_radius_m - x / math.sqrt(3.0) + 1e-9

_MAX_DROP_ATTEMPTS = 10000


def drop_users(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Drop ``n_users`` points uniformly over the union of the cells.

    The cells tile the plane, so a uniform draw over the union is a uniform
    cell pick followed by a uniform in-hexagon point (rejection from the
    bounding box).  Points closer than ``min_bs_distance_m`` to *any* BS are
    rejected and redrawn.
    """
    sites = cell_sites(cfg.n_bs, cfg.cell_radius_m)
    radius = cfg.cell_radius_m
    half_w = math.sqrt(3.0) / 2.0 * radius
    positions = np.empty((cfg.n_users, 2))
    for k in range(cfg.n_users):
        for attempt in range(_MAX_DROP_ATTEMPTS):
            cell = int(rng.integers(cfg.n_bs))
            x = rng.uniform(-half_w, half_w)
            y = rng.uniform(-radius, radius)
            if abs(y) > radius - abs(x) / math.sqrt(3.0):
                continue
            p = sites[cell] + (x, y)
            d = np.sqrt(np.sum((sites - p) ** 2, axis=1))
            if np.min(d) >= cfg.min_bs_distance_m:
                positions[k] = p
                break
        else:
            raise RuntimeError(
                f"could not place user {k} after {_MAX_DROP_ATTEMPTS} attempts; "
                "exclusion radius too aggressive for the geometry"
            )
    return positions


def path_loss_db(distance_km: float, cfg: SystemConfig) -> float:
    """Log-distance path loss in dB at ``distance_km``."""
    if distance_km <= 0:
        raise ValueError(f"distance must be positive, got {distance_km} km")
    return cfg.pathloss_intercept_db + cfg.pathloss_slope * math.log10(distance_km)


def realize_channel(
    cfg: SystemConfig, positions: np.ndarray, rng: np.random.Generator
) -> ChannelRealization:
    """Draw small-scale fading and shadowing for fixed user positions.

    Order of RNG consumption is fixed (shadowing first, then fading,
    user-major) so a given stream replays identically.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.shape != (cfg.n_users, 2):
        raise ValueError(
            f"positions shape {positions.shape} != ({cfg.n_users}, 2)"
        )
    sites = cell_sites(cfg.n_bs, cfg.cell_radius_m)
    k_users, n_bs = cfg.n_users, cfg.n_bs
    m = cfg.total_tx_antennas

    shadow_db = rng.normal(0.0, cfg.shadowing_std_db, size=(k_users, n_bs))
    shadow_lin = 10.0 ** (shadow_db / 10.0)
    pathloss_lin = np.empty((k_users, n_bs))
    for k in range(k_users):
        for n in range(n_bs):
            d_km = float(np.hypot(*(positions[k] - sites[n]))) / 1000.0
            pathloss_lin[k, n] = 10.0 ** (-path_loss_db(d_km, cfg) / 10.0)

    # G_k diagonal: sqrt(g s) repeated over each BS's antenna block.
    g_diag = np.repeat(np.sqrt(pathloss_lin * shadow_lin), cfg.n_t, axis=1)
    h = np.empty((k_users, cfg.n_r, m), dtype=complex)
    for k in range(k_users):
        h_w = complex_gaussian(rng, (cfg.n_r, m))
        h[k] = h_w * g_diag[k][np.newaxis, :]
    return ChannelRealization(
        h=h,
        g_diag=g_diag,
        pathloss_lin=pathloss_lin,
        shadow_lin=shadow_lin,
        user_positions=positions,
    )


def snr_calibration(cfg: SystemConfig, target_edge_snr_db: float) -> float:
    """P_max making the cell-edge interference-free SNR equal the target.

    Edge reference: a user at distance ``cell_radius_m`` with unit shadowing.
    Returns the transmit power P_max = noise * 10^(target/10) / g(edge).
    """
    edge_km = cfg.cell_radius_m / 1000.0
    g_edge = 10.0 ** (-path_loss_db(edge_km, cfg) / 10.0)
    return cfg.noise_power * 10.0 ** (target_edge_snr_db / 10.0) / g_edge


def realization_digest(rlz: ChannelRealization) -> str:
    """Stable content hash of a realization (used to assert common randomness)."""
    digest = hashlib.sha256()
    for arr in (rlz.h, rlz.g_diag, rlz.user_positions):
        digest.update(np.ascontiguousarray(arr).tobytes())
    return digest.hexdigest()
