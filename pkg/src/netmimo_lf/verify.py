"""Self-contained verification suites behind the ``verify`` CLI op.

Each suite runs a property check from the library's analytical claims
against fresh Monte Carlo draws (or pure closed-form evaluation for the
``scaling`` suite) and returns a structured report; nothing here throws on
a failed check — failures are recorded and surface through the exit code.

Suites
------
- ``isa-equivalence``  restricted search at full radius must reproduce the
  exhaustive argmax tuple exactly.
- ``distortion``       mean quantization distortion vs bit budget must track
  the 2^(-B/alpha) law: monotone, slope near -1/alpha, anchored level.
- ``concentration``    per-cell energy of an isotropic source must exceed a
  0.05 relative deviation no more often than the variance bound predicts.
- ``scaling``          frozen closed-form values and structural laws of the
  distortion/loss/bit-budget formulas.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .codebook import build_percell_codebooks, split_bits
from .feedback import search_exhaustive, search_restricted
from .linalg import haar_orthonormal, substream, svd
from .metrics import block_norm_concentration
from .scaling import (
    DistortionForms,
    ScalingInputs,
    bits_for_target_loss,
    codebook_distortion,
    interference_limited_rate,
    throughput_loss_bound,
)

__all__ = [
    "CheckResult",
    "SuiteReport",
    "SUITE_NAMES",
    "run_suite",
    "report_csv",
]

SUITE_NAMES = ("distortion", "concentration", "isa-equivalence", "scaling")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: str
    expected: str


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, observed, expected) -> None:
        self.checks.append(
            CheckResult(name=name, passed=bool(passed), observed=str(observed), expected=str(expected))
        )


def report_csv(reports) -> str:
    """Machine-readable pass/fail summary, one row per check."""
    lines = ["suite,check,passed,observed,expected"]
    for rep in reports:
        for c in rep.checks:
            obs = c.observed.replace(",", ";")
            exp = c.expected.replace(",", ";")
            lines.append(f"{rep.suite},{c.name},{int(c.passed)},{obs},{exp}")
    return "\n".join(lines) + "\n"


def _centroids_of(v_w: np.ndarray, n_t: int):
    """Per-cell column-space bases of a synthetic aggregate source."""
    n_bs, n_r = v_w.shape[0] // n_t, v_w.shape[1]
    return [
        svd(v_w[c * n_t : (c + 1) * n_t]).u[:, :n_r] for c in range(n_bs)
    ]


def run_isa_equivalence(instances: int = 500, seed: int = 101) -> SuiteReport:
    """Full-radius restricted search == exhaustive search, tuple for tuple."""
    t0 = time.perf_counter()
    n_t, n_bs, n_r = 4, 3, 2
    bits = [4, 4, 4]
    delta = math.sqrt(n_r)
    matches = 0
    for i in range(instances):
        rng = substream(seed, 10, i)
        books = build_percell_codebooks(bits, n_t, n_r, rng)
        v_w = haar_orthonormal(n_bs * n_t, n_r, rng)
        full = search_exhaustive(v_w, books, n_t)
        restricted = search_restricted(v_w, _centroids_of(v_w, n_t), books, delta, n_t)
        if full.indices == restricted.indices:
            matches += 1
    rep = SuiteReport(suite="isa-equivalence")
    rep.add(
        "full-radius-tuple-match",
        matches == instances,
        f"{matches}/{instances}",
        f"{instances}/{instances}",
    )
    rep.elapsed_s = time.perf_counter() - t0
    return rep


def distortion_curve(
    bits_grid=(8, 12, 16, 20),
    sources: int = 2000,
    n_t: int = 4,
    n_bs: int = 3,
    n_r: int = 2,
    seed: int = 202,
):
    """Monte Carlo mean distortion per total budget, fresh codebooks per source."""
    means = []
    for j, total in enumerate(bits_grid):
        per_cell = split_bits(int(total), n_bs)
        acc = 0.0
        for i in range(sources):
            rng = substream(seed, 20, j, i)
            books = build_percell_codebooks(per_cell, n_t, n_r, rng)
            v_w = haar_orthonormal(n_bs * n_t, n_r, rng)
            rep = search_exhaustive(v_w, books, n_t)
            acc += rep.distance**2
        means.append(acc / sources)
    return list(bits_grid), means


def run_distortion(
    bits_grid=(8, 12, 16, 20), sources: int = 2000, seed: int = 202
) -> SuiteReport:
    """Distortion-vs-bits law at (4,3,2): slope, monotonicity, anchor level."""
    t0 = time.perf_counter()
    n_t, n_bs, n_r = 4, 3, 2
    grid, means = distortion_curve(bits_grid, sources, n_t, n_bs, n_r, seed)
    alpha = n_r * (n_bs * n_t - n_r)
    slope = float(np.polyfit(grid, np.log2(means), 1)[0])
    target = -1.0 / alpha

    rep = SuiteReport(suite="distortion")
    rep.add(
        "means-monotone-decreasing",
        all(b < a for a, b in zip(means, means[1:])),
        "; ".join(f"B={b}:{m:.4f}" for b, m in zip(grid, means)),
        "strictly decreasing in B",
    )
    rep.add(
        "log2-slope-near-minus-1/alpha",
        abs(slope - target) <= 0.3 * abs(target),
        f"{slope:.5f}",
        f"{target:.5f} +/- 30%",
    )
    if 12 in grid:
        m12 = means[grid.index(12)]
        closed = codebook_distortion(12, n_t, n_bs, n_r).simplified
        rep.add(
            "B=12-mean-near-closed-form",
            0.9 <= m12 <= 1.7,
            f"{m12:.4f} (closed form {closed:.4f})",
            "[0.9, 1.7]",
        )
    rep.elapsed_s = time.perf_counter() - t0
    return rep


def run_concentration(
    n_t_grid=(16, 64, 256),
    n_bs: int = 3,
    eps: float = 0.05,
    samples: int = 10000,
    seed: int = 303,
) -> SuiteReport:
    """Per-cell energy concentration: empirical exceedance vs variance bound."""
    t0 = time.perf_counter()
    rep = SuiteReport(suite="concentration")
    rates = []
    for j, n_t in enumerate(n_t_grid):
        rng = substream(seed, 30, j)
        exceed, bound = block_norm_concentration(n_t, n_bs, eps, samples, rng)
        rates.append(exceed)
        se = math.sqrt(max(exceed * (1.0 - exceed), 1.0 / samples) / samples)
        rep.add(
            f"exceedance-below-bound-nt{n_t}",
            exceed <= bound + 3.0 * se,
            f"{exceed:.5f}",
            f"<= {bound:.5f} + 3se({3 * se:.5f})",
        )
    rep.add(
        "exceedance-decreasing-in-nt",
        all(b <= a for a, b in zip(rates, rates[1:])),
        "; ".join(f"{r:.5f}" for r in rates),
        "non-increasing across the antenna grid",
    )
    rep.elapsed_s = time.perf_counter() - t0
    return rep


def run_scaling() -> SuiteReport:
    """Closed-form spot values and structural laws (no Monte Carlo)."""
    t0 = time.perf_counter()
    rep = SuiteReport(suite="scaling")

    d = codebook_distortion(12, 4, 3, 2)
    rep.add(
        "simplified-distortion-(4;3;2)-B12",
        abs(d.simplified - 1.3195079108) <= 1e-6,
        f"{d.simplified:.10f}",
        "1.3195079108 +/- 1e-6",
    )

    d8 = codebook_distortion(24, 8, 3, 2)
    ratio = d8.refined / d8.simplified
    rep.add(
        "refined-vs-simplified-(8;3;2)",
        0.85 <= ratio <= 0.92,
        f"{ratio:.4f}",
        "[0.85, 0.92]",
    )

    # Loss at the budget the bit law returns never exceeds the target by
    # more than rounding slack, for any channel quality.
    worst = 0.0
    for log2_rho_g in np.linspace(2.0, 40.0, 20):
        si = ScalingInputs(n_t=8, n_bs=3, n_r=2, n_users=12, rho=2.0**log2_rho_g, g_sum=1.0)
        bits = bits_for_target_loss(si, 1.0)
        worst = max(worst, throughput_loss_bound(si, bits))
    rep.add(
        "bit-law-meets-loss-target",
        worst <= 1.0 + 0.01,
        f"max loss {worst:.4f}",
        "<= 1.01",
    )

    # The budget schedule over a geometric channel-quality grid climbs in
    # multiples of the cell count.
    si0 = ScalingInputs(n_t=8, n_bs=3, n_r=2, n_users=12, rho=1.0, g_sum=1.0)
    alpha = si0.alpha
    c_term = alpha * math.log2(2.0 ** (1.0 / si0.n_r) - 1.0)
    base_log = (24.0 + c_term) / alpha  # raw budget hits 24 bits exactly here
    step = 48.0 / (7.0 * alpha)
    schedule = [
        bits_for_target_loss(
            ScalingInputs(
                n_t=8, n_bs=3, n_r=2, n_users=12, rho=2.0 ** (base_log + i * step), g_sum=1.0
            ),
            1.0,
        )
        for i in range(8)
    ]
    steps = [b - a for a, b in zip(schedule, schedule[1:])]
    rep.add(
        "bit-schedule-shape",
        schedule[0] == 24
        and schedule[-1] == 72
        and all(s in (6, 9) for s in steps),
        f"{schedule}",
        "24 -> 72 in steps of 6 or 9",
    )

    r1 = interference_limited_rate(12, 8, 3, 2, 12)
    r2 = interference_limited_rate(24, 8, 3, 2, 12)
    rep.add(
        "rate-linear-in-bits",
        abs(r2.by_antennas - 2 * r1.by_antennas) <= 1e-12
        and abs(r2.by_users - 2 * r1.by_users) <= 1e-12,
        f"by_antennas {r1.by_antennas:.5f}->{r2.by_antennas:.5f}; "
        f"by_users {r1.by_users:.5f}->{r2.by_users:.5f}",
        "doubling bits doubles both rate forms",
    )
    rep.elapsed_s = time.perf_counter() - t0
    return rep


def run_suite(name: str, seed: int = None) -> SuiteReport:
    """Dispatch a suite by its CLI name."""
    if name == "isa-equivalence":
        return run_isa_equivalence(seed=101 if seed is None else seed)
    if name == "distortion":
        return run_distortion(seed=202 if seed is None else seed)
    if name == "concentration":
        return run_concentration(seed=303 if seed is None else seed)
    if name == "scaling":
        return run_scaling()
    raise ValueError(f"unknown suite {name!r}; known: {', '.join(SUITE_NAMES)}")
