"""Command-line entry points.

Exit codes: 0 on success, 1 when a verification suite fails or a run aborts,
2 on configuration errors (bad JSON, unknown keys, unusable flag values).

The seed is resolved as: ``NETMIMO_LF_SEED`` environment variable if set,
else ``--seed``, else the value in the config (or the built-in default).
The environment variable is the only environment override the tool reads.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .channel import SystemConfig
from .experiment import (
    ConfigError,
    emit_csv,
    load_spec,
    run_bits_sweep,
    run_delta_sweep,
    run_experiment,
)
from .scaling import codebook_distortion
from .verify import SUITE_NAMES, report_csv, run_suite

ENV_SEED = "NETMIMO_LF_SEED"

_BITS_SWEEP_CONFIGS = (
    ("cfg-4x3x2x6", dict(n_t=4, n_bs=3, n_r=2, n_users=6)),
    ("cfg-8x3x2x12", dict(n_t=8, n_bs=3, n_r=2, n_users=12)),
)


def _resolve_seed(flag_seed, fallback: int) -> int:
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env!r}")
    if flag_seed is not None:
        return int(flag_seed)
    return int(fallback)


def _float_list(text: str, flag: str):
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise ConfigError(f"{flag} expects a comma-separated number list, got {text!r}")


def _int_list(text: str, flag: str):
    vals = _float_list(text, flag)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"{flag} expects integers, got {text!r}")
    return [int(v) for v in vals]


def _write_or_print(text: str, path) -> None:
    if path:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise RuntimeError(f"cannot write {path}: {exc}") from exc
        print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    spec = load_spec(args.config)
    seed = _resolve_seed(args.seed, spec.base.seed)
    spec = replace(spec, base=replace(spec.base, seed=seed))
    print(
        f"[netmimo-lf] {spec.name}: {len(spec.snr_grid_db)} SNR points x "
        f"{spec.base.trials} trials, schemes {','.join(spec.schemes)}, "
        f"bit mode {spec.bit_mode}, codebooks "
        f"{'per-trial' if spec.redraw_codebooks_per_trial else 'per-experiment'}, "
        f"seed {seed}, workers {args.workers}",
        file=sys.stderr,
    )
    if spec.delta_grid is not None:
        if tuple(spec.schemes) != ("percell-isa",):
            raise ConfigError(
                "a config with delta_grid sweeps the restricted search; "
                "set schemes to [\"percell-isa\"]"
            )
        result = run_delta_sweep(
            spec.base,
            spec.snr_grid_db,
            spec.delta_grid,
            seed=seed,
            workers=args.workers,
            name=spec.name,
        )
    else:
        result = run_experiment(spec, workers=args.workers)
    _write_or_print(emit_csv(result), args.out or spec.output_path)
    return 0


def cmd_verify(args) -> int:
    names = SUITE_NAMES if args.suite == "all" else (args.suite,)
    reports = []
    for name in names:
        rep = run_suite(name, seed=args.seed)
        reports.append(rep)
        for check in rep.checks:
            status = "PASS" if check.passed else "FAIL"
            print(f"{status} {rep.suite}/{check.name}: {check.observed} (want {check.expected})")
        print(f"[netmimo-lf] suite {rep.suite}: "
              f"{'ok' if rep.passed else 'FAILED'} in {rep.elapsed_s:.1f}s", file=sys.stderr)
    if args.out:
        _write_or_print(report_csv(reports), args.out)
    return 0 if all(r.passed for r in reports) else 1


def cmd_distortion(args) -> int:
    from .verify import distortion_curve

    seed = _resolve_seed(args.seed, 202)
    bits = _int_list(args.bits, "--bits")
    if not bits:
        raise ConfigError("--bits needs at least one budget")
    grid, means = distortion_curve(
        bits_grid=bits,
        sources=args.sources,
        n_t=args.n_t,
        n_bs=args.n_bs,
        n_r=args.n_r,
        seed=seed,
    )
    lines = ["bits,distortion_mean,closed_form_simplified,closed_form_refined"]
    for b, m in zip(grid, means):
        forms = codebook_distortion(b, args.n_t, args.n_bs, args.n_r)
        lines.append(
            f"{b},{m:.9g},{forms.simplified:.9g},{forms.refined:.9g}"
        )
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def cmd_sweep_delta(args) -> int:
    spec = load_spec(args.config) if args.config else None
    base = spec.base if spec else SystemConfig()
    seed = _resolve_seed(args.seed, base.seed)
    if args.trials is not None:
        base = replace(base, trials=args.trials)
    base = replace(base, seed=seed)
    if args.deltas is not None:
        deltas = _float_list(args.deltas, "--deltas")
    elif spec is not None and spec.delta_grid is not None:
        deltas = list(spec.delta_grid)
    else:
        deltas = [0.8, 0.9, 1.0, 1.2, 1.4142135624]
    if args.snr is not None:
        snr = _float_list(args.snr, "--snr")
    elif spec is not None:
        snr = list(spec.snr_grid_db)
    else:
        snr = [10.0, 20.0, 30.0]
    if not deltas or not snr:
        raise ConfigError("--deltas and --snr must be nonempty")
    print(
        f"[netmimo-lf] delta sweep: radii {deltas}, SNR {snr}, {base.trials} trials, "
        f"seed {seed}, workers {args.workers}",
        file=sys.stderr,
    )
    result = run_delta_sweep(base, snr, deltas, seed=seed, workers=args.workers)
    _write_or_print(emit_csv(result), args.out)
    return 0


def cmd_sweep_bits(args) -> int:
    seed = _resolve_seed(args.seed, 0)
    per_bs = _int_list(args.bits_per_bs, "--bits-per-bs")
    if not per_bs:
        raise ConfigError("--bits-per-bs needs at least one budget")
    configs = [
        (label, SystemConfig(**shape)) for label, shape in _BITS_SWEEP_CONFIGS
    ]
    print(
        f"[netmimo-lf] bits sweep: budgets/BS {per_bs} at {args.snr:g} dB, "
        f"{args.trials} trials, configs {'/'.join(l for l, _ in configs)}, "
        f"seed {seed}, workers {args.workers}",
        file=sys.stderr,
    )
    result = run_bits_sweep(
        configs, per_bs, args.snr, trials=args.trials, seed=seed, workers=args.workers
    )
    _write_or_print(emit_csv(result), args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netmimo-lf",
        description=(
            "Limited-feedback network-MIMO simulator: per-cell product "
            "codebook quantization, restricted index search, zero-forcing "
            "precoding, and Monte Carlo rate/distortion experiments."
        ),
        epilog=f"Seed precedence: {ENV_SEED} env var, then --seed, then config/default.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate", help="run a JSON-configured SNR sweep and emit the results CSV"
    )
    p.add_argument("--config", required=True, help="path to the experiment JSON config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument(
        "--out", default=None, help="output CSV path (default: config output_path or stdout)"
    )
    p.add_argument(
        "--workers", type=int, default=1, help="worker processes (results identical for any value)"
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a verification suite and report pass/fail")
    p.add_argument(
        "--suite",
        required=True,
        choices=SUITE_NAMES + ("all",),
        help="which property suite to run",
    )
    p.add_argument("--seed", type=int, default=None, help="override the suite's Monte Carlo seed")
    p.add_argument("--out", default=None, help="write the machine-readable report CSV here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "distortion", help="Monte Carlo distortion vs bit budget with closed-form columns"
    )
    p.add_argument("--bits", default="8,12,16,20", help="comma-separated total budgets")
    p.add_argument("--sources", type=int, default=2000, help="sources per budget")
    p.add_argument("--n-t", type=int, default=4, help="antennas per BS")
    p.add_argument("--n-bs", type=int, default=3, help="cooperating BS count")
    p.add_argument("--n-r", type=int, default=2, help="receive antennas per user")
    p.add_argument("--seed", type=int, default=None, help="Monte Carlo seed")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_distortion)

    p = sub.add_parser(
        "sweep-delta",
        help="rate/complexity tradeoff of the restricted search over its radius",
    )
    p.add_argument(
        "--config", default=None, help="JSON config supplying the base system and grids"
    )
    p.add_argument(
        "--deltas",
        default=None,
        help=(
            "comma-separated radii (default: config delta_grid, else "
            "0.8,0.9,1.0,1.2,sqrt(2)); sqrt(n_r) reproduces the exhaustive scan"
        ),
    )
    p.add_argument(
        "--snr",
        default=None,
        help="comma-separated SNR grid in dB (default: config grid, else 10,20,30)",
    )
    p.add_argument("--trials", type=int, default=None, help="override trials per SNR point")
    p.add_argument("--seed", type=int, default=None, help="override the seed")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep_delta)

    p = sub.add_parser(
        "sweep-bits",
        help="rate vs per-BS feedback budget at one SNR for both reference system shapes",
    )
    p.add_argument("--bits-per-bs", default="2,4,6,8", help="comma-separated per-BS budgets")
    p.add_argument("--snr", type=float, default=40.0, help="interference-free SNR in dB")
    p.add_argument("--trials", type=int, default=200, help="trials per budget point")
    p.add_argument("--seed", type=int, default=None, help="override the seed")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep_bits)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
