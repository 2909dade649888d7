"""Monte Carlo experiment driver and CSV emission.

An experiment is a JSON-declared sweep: a base system, an SNR grid (cell-edge
interference-free SNR; transmit power is calibrated per point), a set of
schemes, and a bit policy.  Every scheme in a trial consumes the *same*
channel realization (common random numbers), and every trial draws its
randomness from a counter-addressed substream of the experiment seed, so
results are byte-identical no matter how many workers executed the trials.

Schemes
-------
- ``gcsi``                perfect-CSI block diagonalization (no quantization)
- ``percell-exhaustive``  per-cell product codebook, full index product scan
- ``percell-isa``         same codebooks, search restricted to per-cell
                          sub-codebooks of radius delta around the centroids
- ``jointcell``           one unstructured codebook over all antennas
- ``givens-4``/``givens-8`` rotation-parameter baseline at 4/8 bits per BS

Bit policy: ``fixed`` uses the base per-cell budgets; ``scaled`` recomputes
the total budget per SNR point from the loss-target law (capped at
``SCALED_TOTAL_BITS_CAP`` total bits so index products stay searchable);
``both`` runs the quantized schemes under both policies with ``-fixed`` /
``-scaled`` suffixed tags.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .channel import (
    ChannelRealization,
    SystemConfig,
    cell_sites,
    drop_users,
    path_loss_db,
    realization_digest,
    realize_channel,
    snr_calibration,
)
from .codebook import (
    Codebook,
    build_jointcell_codebook,
    build_percell_codebooks,
    joint_quantize,
    split_bits,
)
from .feedback import (
    FeedbackReport,
    normalize_and_decompose,
    reconstruct,
    search_exhaustive,
    search_restricted,
)
from .givens import givens_decode, givens_encode_budget
from .linalg import substream
from .metrics import IllConditionedSample, distortion_sample, rate_csit, rate_lf
from .precoding import bd_precoders
from .scaling import ScalingInputs, bits_for_target_loss, normalized_gain_sum

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "RowRecord",
    "ExperimentResult",
    "SCHEME_TAGS",
    "SCALED_TOTAL_BITS_CAP",
    "CSV_HEADER",
    "load_spec",
    "run_experiment",
    "run_delta_sweep",
    "run_bits_sweep",
    "emit_csv",
]

SCHEME_TAGS = (
    "gcsi",
    "percell-exhaustive",
    "percell-isa",
    "jointcell",
    "givens-4",
    "givens-8",
)

# Total-bit ceiling for the scaled policy: the loss-target law asks for
# budgets far beyond what an index-product search can visit, so scaled
# budgets are clamped here and the clamp is reported.
SCALED_TOTAL_BITS_CAP = 24

CSV_HEADER = "snr_db,scheme,rate_mean,rate_ci,distortion_mean,rel_complexity,excluded,bits"

_BIT_MODES = ("fixed", "scaled", "both")


class ConfigError(ValueError):
    """Bad experiment configuration (unknown keys, wrong types, bad values)."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one experiment run."""

    name: str
    base: SystemConfig
    snr_grid_db: tuple
    schemes: tuple
    delta_grid: tuple = None
    bit_mode: str = "fixed"
    epsilon: float = 1.0
    output_path: str = None
    redraw_codebooks_per_trial: bool = False

    def __post_init__(self):
        if not self.name:
            raise ConfigError("experiment needs a name")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must be a nonempty list")
        if not self.schemes:
            raise ConfigError("schemes must be a nonempty list")
        for tag in self.schemes:
            if tag not in SCHEME_TAGS:
                raise ConfigError(
                    f"unknown scheme {tag!r}; known: {', '.join(SCHEME_TAGS)}"
                )
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("schemes must be unique")
        if self.bit_mode not in _BIT_MODES:
            raise ConfigError(f"bit_mode must be one of {_BIT_MODES}")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.delta_grid is not None:
            if any(d < 0 for d in self.delta_grid):
                raise ConfigError("delta_grid radii must be nonnegative")


@dataclass(frozen=True)
class RowRecord:
    """One CSV row: a (SNR point, scheme) aggregate."""

    snr_db: float
    scheme: str
    rate_mean: float
    rate_ci: float
    distortion_mean: float
    rel_complexity: float
    excluded: int
    bits: int


@dataclass
class ExperimentResult:
    name: str
    rows: list
    meta: dict = field(default_factory=dict)


def _spec_from_dict(raw: dict) -> ExperimentSpec:
    allowed = {
        "name",
        "base",
        "snr_grid_db",
        "schemes",
        "delta_grid",
        "bit_mode",
        "output_path",
        "redraw_codebooks_per_trial",
    }
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "base" not in raw or not isinstance(raw["base"], dict):
        raise ConfigError("config needs a 'base' object with system parameters")
    base_fields = {f.name for f in fields(SystemConfig)}
    bad = set(raw["base"]) - base_fields
    if bad:
        raise ConfigError(f"unknown base keys: {sorted(bad)}")
    try:
        base = SystemConfig(**raw["base"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad base config: {exc}") from exc

    bit_mode = raw.get("bit_mode", "fixed")
    epsilon = 1.0
    if isinstance(bit_mode, dict):
        extra = set(bit_mode) - {"mode", "epsilon"}
        if extra:
            raise ConfigError(f"unknown bit_mode keys: {sorted(extra)}")
        epsilon = float(bit_mode.get("epsilon", 1.0))
        bit_mode = bit_mode.get("mode", "fixed")
    if not isinstance(bit_mode, str):
        raise ConfigError("bit_mode must be a string or an object with 'mode'")

    try:
        return ExperimentSpec(
            name=str(raw.get("name", "experiment")),
            base=base,
            snr_grid_db=tuple(float(s) for s in raw.get("snr_grid_db", ())),
            schemes=tuple(raw.get("schemes", ())),
            delta_grid=(
                tuple(float(d) for d in raw["delta_grid"])
                if raw.get("delta_grid") is not None
                else None
            ),
            bit_mode=bit_mode,
            epsilon=epsilon,
            output_path=raw.get("output_path"),
            redraw_codebooks_per_trial=bool(raw.get("redraw_codebooks_per_trial", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def load_spec(source) -> ExperimentSpec:
    """Parse an ExperimentSpec from a dict, JSON string, or file path."""
    if isinstance(source, dict):
        return _spec_from_dict(source)
    text = source
    if not str(source).lstrip().startswith("{"):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return _spec_from_dict(raw)


# ---------------------------------------------------------------------------
# Trial execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _SchemeJob:
    """Resolved per-point plan for one output row family."""

    tag: str
    kind: str  # gcsi | percell-exhaustive | percell-isa | jointcell | givens
    total_bits: int = 0
    bits_per_cell: tuple = None
    delta: tuple = None
    percell_key: tuple = None
    joint_key: tuple = None


@dataclass(frozen=True)
class _TrialCtx:
    cfg: SystemConfig
    seed: int
    channel_key: tuple
    jobs: tuple
    codebooks: dict
    redraw_per_trial: bool


@dataclass
class _SchemeTrialOut:
    mean_rate: float  # None when every user sample was excluded
    d2_sum: float
    searched_sum: int
    excluded: int
    digest: str
    infeasible: int = 0  # BD null space too small for this instance


def _percell_books(ctx: _TrialCtx, job: _SchemeJob, t: int):
    if ctx.redraw_per_trial:
        rng = substream(ctx.seed, 4, *job.percell_key, t)
        return build_percell_codebooks(job.bits_per_cell, ctx.cfg.n_t, ctx.cfg.n_r, rng)
    return ctx.codebooks[job.percell_key]


def _joint_book(ctx: _TrialCtx, job: _SchemeJob, t: int):
    if ctx.redraw_per_trial:
        rng = substream(ctx.seed, 4, *job.joint_key, t)
        return build_jointcell_codebook(
            job.total_bits, ctx.cfg.n_bs, ctx.cfg.n_t, ctx.cfg.n_r, rng
        )
    return ctx.codebooks[job.joint_key]


def _quantize_all(ctx: _TrialCtx, job: _SchemeJob, sources, rlz, t):
    """Quantized CSI + per-user (distortion, searched) for one scheme."""
    cfg = ctx.cfg
    csis, d2s, searched = [], [], []
    if job.kind in ("percell-exhaustive", "percell-isa"):
        books = _percell_books(ctx, job, t)
        for k in range(cfg.n_users):
            v_w, centroids = sources[k]
            if job.kind == "percell-exhaustive":
                rep = search_exhaustive(v_w, books, cfg.n_t)
            else:
                rep = search_restricted(v_w, centroids, books, job.delta, cfg.n_t)
            q = reconstruct(rep, books, rlz, k)
            csis.append(q.h_hat)
            d2s.append(rep.distance ** 2)
            searched.append(rep.searched_count)
    elif job.kind == "jointcell":
        book = _joint_book(ctx, job, t)
        for k in range(cfg.n_users):
            v_w, _ = sources[k]
            idx, dist = joint_quantize(v_w, book)
            v_hat = book.codewords[idx]
            csis.append(v_hat.conj().T * rlz.g_diag[k][np.newaxis, :])
            d2s.append(dist ** 2)
            searched.append(book.size)
    elif job.kind == "givens":
        for k in range(cfg.n_users):
            v_w, _ = sources[k]
            v_hat = givens_decode(givens_encode_budget(v_w, job.total_bits))
            csis.append(v_hat.conj().T * rlz.g_diag[k][np.newaxis, :])
            d2s.append(distortion_sample(v_w, v_hat))
            searched.append(0)
    else:
        raise ValueError(f"not a quantized scheme kind: {job.kind}")
    return csis, d2s, searched


def _run_trial(ctx: _TrialCtx, t: int) -> dict:
    cfg = ctx.cfg
    rng = substream(ctx.seed, *ctx.channel_key, t)
    positions = drop_users(cfg, rng)
    rlz = realize_channel(cfg, positions, rng)

    needs_sources = any(job.kind != "gcsi" for job in ctx.jobs)
    sources = None
    if needs_sources:
        sources = [normalize_and_decompose(rlz, k, cfg.n_t) for k in range(cfg.n_users)]

    out = {}
    for job in ctx.jobs:
        digest = realization_digest(rlz)
        if job.kind == "gcsi":
            csis = [rlz.h[k] for k in range(cfg.n_users)]
            d2s, searched = [0.0], [0]
        else:
            csis, d2s, searched = _quantize_all(ctx, job, sources, rlz, t)
        try:
            pre = bd_precoders(csis, cfg)
        except ValueError:
            out[job.tag] = _SchemeTrialOut(
                mean_rate=None,
                d2_sum=float(np.sum(d2s)),
                searched_sum=int(np.sum(searched)),
                excluded=cfg.n_users,
                digest=digest,
                infeasible=1,
            )
            continue
        rates, excluded = [], 0
        for k in range(cfg.n_users):
            try:
                if job.kind == "gcsi":
                    rates.append(
                        rate_csit(rlz.h[k], pre.w[k], pre.per_stream_power, cfg.noise_power)
                    )
                else:
                    rates.append(
                        rate_lf(rlz.h[k], pre.w, k, pre.per_stream_power, cfg.noise_power)
                    )
            except IllConditionedSample:
                excluded += 1
        out[job.tag] = _SchemeTrialOut(
            mean_rate=float(np.mean(rates)) if rates else None,
            d2_sum=float(np.sum(d2s)),
            searched_sum=int(np.sum(searched)),
            excluded=excluded,
            digest=digest,
        )
    return out


def _trial_star(args):
    return _run_trial(*args)


def _map_trials(ctx: _TrialCtx, trials: int, workers: int):
    """Run trials 0..trials-1, in order, optionally across processes.

    The reduction order is the trial index regardless of worker count, which
    together with counter-addressed substreams makes output byte-identical
    for any ``workers``.
    """
    if workers <= 1:
        return [_run_trial(ctx, t) for t in range(trials)]
    chunk = max(1, trials // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_trial_star, [(ctx, t) for t in range(trials)], chunksize=chunk))


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------

def _population_gain_sum(base: SystemConfig, seed: int, drops: int = 200) -> float:
    """Mean normalized large-scale gain sum over a deterministic population.

    Only path gains enter (shadowing is part of the small-scale state the
    bit law averages over), and the population stream is keyed off the seed
    alone so every SNR point sees the same value.
    """
    rng = substream(seed, 3)
    sites = cell_sites(base.n_bs, base.cell_radius_m)
    vals = []
    for _ in range(drops):
        positions = drop_users(base, rng)
        for k in range(base.n_users):
            g_row = [
                10.0
                ** (
                    -path_loss_db(
                        float(np.hypot(*(positions[k] - sites[n]))) / 1000.0, base
                    )
                    / 10.0
                )
                for n in range(base.n_bs)
            ]
            vals.append(normalized_gain_sum(g_row))
    return float(np.mean(vals))


def _scaled_total_bits(base: SystemConfig, p_max: float, seed: int, epsilon: float) -> int:
    si = ScalingInputs(
        n_t=base.n_t,
        n_bs=base.n_bs,
        n_r=base.n_r,
        n_users=base.n_users,
        rho=p_max / base.noise_power,
        g_sum=_population_gain_sum(base, seed),
    )
    return min(SCALED_TOTAL_BITS_CAP, bits_for_target_loss(si, epsilon))


def _jobs_for_point(spec: ExperimentSpec, point_idx: int, p_max: float):
    """Resolve schemes x bit policy into concrete jobs for one SNR point."""
    base = spec.base
    modes = {"fixed": [("", "fixed")], "scaled": [("", "scaled")], "both": [
        ("-fixed", "fixed"), ("-scaled", "scaled")]}[spec.bit_mode]
    scaled_bits = None
    if any(m == "scaled" for _, m in modes):
        scaled_bits = _scaled_total_bits(base, p_max, base.seed, spec.epsilon)

    jobs = []
    for tag in spec.schemes:
        if tag == "gcsi":
            jobs.append(_SchemeJob(tag="gcsi", kind="gcsi"))
            continue
        if tag.startswith("givens-"):
            per_bs = int(tag.split("-", 1)[1])
            jobs.append(
                _SchemeJob(tag=tag, kind="givens", total_bits=per_bs * base.n_bs)
            )
            continue
        for suffix, mode in modes:
            if mode == "fixed":
                bits_cells = tuple(base.bits_per_cell)
            else:
                bits_cells = tuple(split_bits(scaled_bits, base.n_bs))
            total = int(sum(bits_cells))
            mode_id = 0 if mode == "fixed" else 1
            if tag == "jointcell":
                jobs.append(
                    _SchemeJob(
                        tag=tag + suffix,
                        kind="jointcell",
                        total_bits=total,
                        joint_key=(2, point_idx, mode_id),
                    )
                )
            else:
                jobs.append(
                    _SchemeJob(
                        tag=tag + suffix,
                        kind=tag,
                        total_bits=total,
                        bits_per_cell=bits_cells,
                        delta=tuple(base.delta),
                        percell_key=(1, point_idx, mode_id),
                    )
                )
    return jobs


def _draw_codebooks(jobs, cfg: SystemConfig, seed: int) -> dict:
    books = {}
    for job in jobs:
        if job.percell_key is not None and job.percell_key not in books:
            rng = substream(seed, *job.percell_key)
            books[job.percell_key] = build_percell_codebooks(
                job.bits_per_cell, cfg.n_t, cfg.n_r, rng
            )
        if job.joint_key is not None and job.joint_key not in books:
            rng = substream(seed, *job.joint_key)
            books[job.joint_key] = build_jointcell_codebook(
                job.total_bits, cfg.n_bs, cfg.n_t, cfg.n_r, rng
            )
    return books


def _check_infeasible(name: str, snr_db: float, jobs, trial_outs, trials: int) -> None:
    """Abort when more than 1% of a scheme's instances had no BD null space."""
    for job in jobs:
        count = sum(out[job.tag].infeasible for out in trial_outs)
        if count > 0.01 * trials:
            raise RuntimeError(
                f"experiment {name!r}: {count}/{trials} zero-forcing-infeasible "
                f"instances for scheme {job.tag} at {snr_db:g} dB (limit 1%); "
                "the system shape leaves too little null space"
            )


def _reduce_rows(snr_db: float, jobs, trial_outs, trials: int, n_users: int):
    rows = []
    for job in jobs:
        means = [out[job.tag].mean_rate for out in trial_outs]
        means = [m for m in means if m is not None]
        if means:
            rate_mean = float(np.mean(means))
            rate_ci = (
                1.96 * float(np.std(means, ddof=1)) / math.sqrt(len(means))
                if len(means) > 1
                else 0.0
            )
        else:
            rate_mean, rate_ci = float("nan"), 0.0
        d2 = sum(out[job.tag].d2_sum for out in trial_outs)
        searched = sum(out[job.tag].searched_sum for out in trial_outs)
        excluded = sum(out[job.tag].excluded for out in trial_outs)
        denom = trials * n_users
        rows.append(
            RowRecord(
                snr_db=float(snr_db),
                scheme=job.tag,
                rate_mean=rate_mean,
                rate_ci=rate_ci,
                distortion_mean=d2 / denom,
                rel_complexity=searched / denom / 2.0 ** job.total_bits,
                excluded=excluded,
                bits=job.total_bits,
            )
        )
    return rows


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Execute the full SNR sweep described by ``spec``."""
    base = spec.base
    rows = []
    for point_idx, snr_db in enumerate(spec.snr_grid_db):
        p_max = snr_calibration(base, snr_db)
        cfg = replace(base, p_max=p_max)
        jobs = tuple(_jobs_for_point(spec, point_idx, p_max))
        codebooks = (
            {} if spec.redraw_codebooks_per_trial else _draw_codebooks(jobs, cfg, base.seed)
        )
        ctx = _TrialCtx(
            cfg=cfg,
            seed=base.seed,
            channel_key=(0, point_idx),
            jobs=jobs,
            codebooks=codebooks,
            redraw_per_trial=spec.redraw_codebooks_per_trial,
        )
        outs = _map_trials(ctx, base.trials, workers)
        _check_infeasible(spec.name, snr_db, jobs, outs, base.trials)
        rows.extend(_reduce_rows(snr_db, jobs, outs, base.trials, cfg.n_users))
    return ExperimentResult(
        name=spec.name,
        rows=rows,
        meta={
            "trials": base.trials,
            "seed": base.seed,
            "codebooks": "per-trial" if spec.redraw_codebooks_per_trial else "per-experiment",
        },
    )


def run_delta_sweep(
    base: SystemConfig,
    snr_grid_db,
    delta_grid,
    seed: int = None,
    workers: int = 1,
    name: str = "delta-sweep",
) -> ExperimentResult:
    """Performance/complexity sweep over the search radius.

    One row family per radius (tag ``percell-isa-dX.XX``), all radii sharing
    channels and codebooks, so rate ratios between radii are paired.  A
    radius of sqrt(n_r) makes the restricted search identical to the
    exhaustive scan and serves as the reference row.
    """
    seed = base.seed if seed is None else seed
    if not delta_grid:
        raise ConfigError("delta_grid must be nonempty")
    bits_cells = tuple(base.bits_per_cell)
    total = int(sum(bits_cells))
    rows = []
    for point_idx, snr_db in enumerate(snr_grid_db):
        p_max = snr_calibration(base, snr_db)
        cfg = replace(base, p_max=p_max, seed=seed)
        jobs = [
            _SchemeJob(
                tag=f"percell-isa-d{float(d):.2f}",
                kind="percell-isa",
                total_bits=total,
                bits_per_cell=bits_cells,
                delta=(float(d),) * base.n_bs,
                percell_key=(1, point_idx, 0),
            )
            for d in delta_grid
        ]
        jobs = tuple(jobs)
        codebooks = _draw_codebooks(jobs, cfg, seed)
        ctx = _TrialCtx(
            cfg=cfg,
            seed=seed,
            channel_key=(0, point_idx),
            jobs=jobs,
            codebooks=codebooks,
            redraw_per_trial=False,
        )
        outs = _map_trials(ctx, base.trials, workers)
        _check_infeasible(name, snr_db, jobs, outs, base.trials)
        rows.extend(_reduce_rows(snr_db, jobs, outs, base.trials, cfg.n_users))
    return ExperimentResult(
        name=name, rows=rows, meta={"trials": base.trials, "seed": seed, "codebooks": "per-experiment"}
    )


def run_bits_sweep(
    configs,
    bits_per_bs_grid,
    snr_db: float,
    trials: int,
    seed: int,
    workers: int = 1,
    name: str = "bits-sweep",
) -> ExperimentResult:
    """Rate versus feedback budget at one SNR for several system shapes.

    ``configs`` is a list of ``(label, SystemConfig)``; each label becomes
    the scheme tag of its rows (the CSV schema has no separate config
    column), with one row per per-BS budget in ``bits_per_bs_grid``.
    Channels are shared across budgets within a config, so the budget trend
    is paired.
    """
    rows = []
    for cfg_idx, (label, base) in enumerate(configs):
        p_max = snr_calibration(base, snr_db)
        for b_idx, per_bs in enumerate(bits_per_bs_grid):
            bits_cells = (int(per_bs),) * base.n_bs
            cfg = replace(
                base, p_max=p_max, bits_per_cell=list(bits_cells), trials=trials, seed=seed
            )
            job = _SchemeJob(
                tag=label,
                kind="percell-exhaustive",
                total_bits=int(per_bs) * base.n_bs,
                bits_per_cell=bits_cells,
                percell_key=(1, cfg_idx, b_idx),
            )
            ctx = _TrialCtx(
                cfg=cfg,
                seed=seed,
                channel_key=(0, cfg_idx),
                jobs=(job,),
                codebooks=_draw_codebooks((job,), cfg, seed),
                redraw_per_trial=False,
            )
            outs = _map_trials(ctx, trials, workers)
            _check_infeasible(name, snr_db, (job,), outs, trials)
            rows.extend(_reduce_rows(snr_db, (job,), outs, trials, cfg.n_users))
    return ExperimentResult(
        name=name, rows=rows, meta={"trials": trials, "seed": seed, "codebooks": "per-experiment"}
    )


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return format(float(x), ".9g")


def emit_csv(result: ExperimentResult, path: str = None) -> str:
    """Serialize rows (sorted by snr_db, scheme, bits) at 9 significant digits."""
    rows = sorted(result.rows, key=lambda r: (r.snr_db, r.scheme, r.bits))
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    _fmt(r.snr_db),
                    r.scheme,
                    _fmt(r.rate_mean),
                    _fmt(r.rate_ci),
                    _fmt(r.distortion_mean),
                    _fmt(r.rel_complexity),
                    str(int(r.excluded)),
                    str(int(r.bits)),
                ]
            )
        )
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
