#!/usr/bin/env python3
"""Render figure analogues from the simulator's results CSV.

Reads the eight-column results schema
(snr_db,scheme,rate_mean,rate_ci,distortion_mean,rel_complexity,excluded,bits)
and produces one static image per invocation:

  fig2  per-user mean rate vs interference-free SNR, one series per scheme,
        error bars from the rate confidence column
  fig3  restricted-search rate vs SNR, one series per search radius, with the
        measured fraction of the full index product in each label
  fig4  perfect-CSI rate vs the fixed- and scaled-budget quantized rates
  fig5  rate vs per-BS feedback bits at one SNR, one fitted line per system
        shape, slope annotated

The script is read-only over the CSV and deterministic: rendering the same
file twice produces byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import re
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

EXPECTED_HEADER = [
    "snr_db",
    "scheme",
    "rate_mean",
    "rate_ci",
    "distortion_mean",
    "rel_complexity",
    "excluded",
    "bits",
]

FIGURES = ("fig2", "fig3", "fig4", "fig5")

# stable legend order; unknown tags follow alphabetically
_TAG_ORDER = [
    "gcsi",
    "percell-exhaustive",
    "percell-exhaustive-fixed",
    "percell-exhaustive-scaled",
    "percell-isa",
    "jointcell",
    "givens-4",
    "givens-8",
]

plt.rcParams.update(
    {
        "figure.figsize": (6.4, 4.4),
        "figure.dpi": 110,
        "savefig.dpi": 150,
        "axes.grid": True,
        "grid.alpha": 0.35,
        "font.size": 10,
        "legend.fontsize": 9,
        "svg.hashsalt": "netmimo-lf-plots",
    }
)


class PlotError(ValueError):
    """Unusable input for the requested figure."""


@dataclass(frozen=True)
class PlotSpec:
    input_csv: str
    figure: str
    output_image: str
    title: str = None
    xlabel: str = None
    ylabel: str = None


def read_rows(path: str):
    """Parse the results CSV, insisting on the exact harness header."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc}")
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EXPECTED_HEADER:
            raise PlotError(
                f"{path} does not match the results schema; expected header "
                f"{','.join(EXPECTED_HEADER)}, got "
                f"{','.join(reader.fieldnames or ['<empty file>'])}"
            )
        rows = []
        for rec in reader:
            try:
                rows.append(
                    {
                        "snr_db": float(rec["snr_db"]),
                        "scheme": rec["scheme"],
                        "rate_mean": float(rec["rate_mean"]),
                        "rate_ci": float(rec["rate_ci"]),
                        "distortion_mean": float(rec["distortion_mean"]),
                        "rel_complexity": float(rec["rel_complexity"]),
                        "excluded": int(rec["excluded"]),
                        "bits": int(rec["bits"]),
                    }
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise PlotError(f"{path}: bad row {reader.line_num}: {exc}")
    if not rows:
        raise PlotError(f"{path} has no data rows, nothing to plot")
    return rows


def _schemes(rows):
    tags = sorted({r["scheme"] for r in rows})
    order = {t: i for i, t in enumerate(_TAG_ORDER)}
    return sorted(tags, key=lambda t: (order.get(t, len(order)), t))


def _series(rows, tag):
    pts = sorted((r for r in rows if r["scheme"] == tag), key=lambda r: r["snr_db"])
    return (
        np.array([p["snr_db"] for p in pts]),
        np.array([p["rate_mean"] for p in pts]),
        np.array([p["rate_ci"] for p in pts]),
        pts,
    )


def _require(rows, needed, figure):
    have = set(_schemes(rows))
    missing = [t for t in needed if t not in have]
    if missing:
        raise PlotError(
            f"{figure} needs scheme(s) {', '.join(missing)}; "
            f"CSV has: {', '.join(sorted(have))}"
        )


def _finish(ax, spec: PlotSpec, default_title, default_x, default_y):
    ax.set_title(spec.title or default_title)
    ax.set_xlabel(spec.xlabel or default_x)
    ax.set_ylabel(spec.ylabel or default_y)
    ax.legend()


def _draw_fig2(ax, rows, spec):
    _require(rows, ["gcsi"], "fig2")
    tags = _schemes(rows)
    for tag in tags:
        x, y, ci, _ = _series(rows, tag)
        ax.errorbar(x, y, yerr=ci, marker="o", markersize=3.5, capsize=2, label=tag)
    _finish(
        ax,
        spec,
        "Per-user rate vs interference-free SNR",
        "interference-free SNR (dB)",
        "mean rate (bit/channel use)",
    )
    return len(tags)


def _draw_fig3(ax, rows, spec):
    tags = [t for t in _schemes(rows) if t.startswith("percell-isa-d")]
    if not tags:
        raise PlotError(
            "fig3 needs percell-isa-d* schemes (one per search radius); "
            f"CSV has: {', '.join(_schemes(rows))}"
        )
    tags.sort(key=lambda t: float(t.rsplit("d", 1)[1]))
    for tag in tags:
        x, y, ci, pts = _series(rows, tag)
        delta = float(tag.rsplit("d", 1)[1])
        frac = np.mean([p["rel_complexity"] for p in pts])
        label = f"δ = {delta:.2f} ({100 * frac:.1f}% of full search)"
        ax.errorbar(x, y, yerr=ci, marker="o", markersize=3.5, capsize=2, label=label)
    _finish(
        ax,
        spec,
        "Restricted search: rate vs radius",
        "interference-free SNR (dB)",
        "mean rate (bit/channel use)",
    )
    return len(tags)


def _draw_fig4(ax, rows, spec):
    needed = ["gcsi", "percell-exhaustive-fixed", "percell-exhaustive-scaled"]
    _require(rows, needed, "fig4")
    labels = {
        "gcsi": "perfect CSI",
        "percell-exhaustive-fixed": None,  # filled from bits below
        "percell-exhaustive-scaled": None,
    }
    for tag in needed:
        x, y, ci, pts = _series(rows, tag)
        label = labels[tag]
        if label is None:
            bits = sorted({p["bits"] for p in pts})
            kind = "fixed" if tag.endswith("fixed") else "scaled"
            shown = f"{bits[0]}" if len(bits) == 1 else f"{bits[0]}..{bits[-1]}"
            label = f"quantized, {kind} budget ({shown} bits)"
        ax.errorbar(x, y, yerr=ci, marker="o", markersize=3.5, capsize=2, label=label)
    _finish(
        ax,
        spec,
        "Perfect-CSI vs limited-feedback rate, scaled bit budget",
        "interference-free SNR (dB)",
        "mean rate (bit/channel use)",
    )
    return len(needed)


def _per_bs_bits(tag: str, bits: int) -> float:
    """Per-BS budget; system shape tags like cfg-8x3x2x12 carry the BS count."""
    m = re.match(r".*?-\d+x(\d+)x\d+x\d+$", tag)
    if m:
        return bits / int(m.group(1))
    return float(bits)


def _draw_fig5(ax, rows, spec):
    tags = _schemes(rows)
    usable = [t for t in tags if len({r["bits"] for r in rows if r["scheme"] == t}) >= 2]
    if not usable:
        raise PlotError(
            "fig5 needs at least one scheme with two or more budget points; "
            f"CSV has: {', '.join(tags)}"
        )
    for tag in usable:
        pts = sorted((r for r in rows if r["scheme"] == tag), key=lambda r: r["bits"])
        x = np.array([_per_bs_bits(tag, p["bits"]) for p in pts])
        y = np.array([p["rate_mean"] for p in pts])
        ci = np.array([p["rate_ci"] for p in pts])
        slope, intercept = np.polyfit(x, y, 1)
        line = ax.errorbar(
            x, y, yerr=ci, linestyle="none", marker="o", markersize=5, capsize=2, label=tag
        )
        xs = np.linspace(x.min(), x.max(), 32)
        ax.plot(
            xs,
            slope * xs + intercept,
            linestyle="--",
            linewidth=1.1,
            color=line.lines[0].get_color(),
        )
        ax.annotate(
            f"slope {slope:.2f}",
            (x[-1], y[-1]),
            textcoords="offset points",
            xytext=(6, -10),
            fontsize=8.5,
            color=line.lines[0].get_color(),
        )
    _finish(
        ax,
        spec,
        "Rate vs per-BS feedback budget",
        "feedback bits per BS",
        "mean rate (bit/channel use)",
    )
    return len(usable)


_DRAWERS = {"fig2": _draw_fig2, "fig3": _draw_fig3, "fig4": _draw_fig4, "fig5": _draw_fig5}


def render(spec: PlotSpec) -> dict:
    """Draw the requested figure; returns {'series', 'rows', 'path'}."""
    rows = read_rows(spec.input_csv)
    fig, ax = plt.subplots()
    try:
        n_series = _DRAWERS[spec.figure](ax, rows, spec)
        fig.tight_layout()
        fig.savefig(spec.output_image)
    finally:
        plt.close(fig)
    return {"series": n_series, "rows": len(rows), "path": spec.output_image}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render a figure analogue from a simulator results CSV."
    )
    parser.add_argument("--figure", required=True, choices=FIGURES)
    parser.add_argument("--in", dest="input_csv", required=True, help="results CSV path")
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--title", default=None, help="override the default title")
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    args = parser.parse_args(argv)
    spec = PlotSpec(
        input_csv=args.input_csv,
        figure=args.figure,
        output_image=args.out,
        title=args.title,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
    )
    try:
        info = render(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {info['path']}: {info['series']} series, {info['rows']} rows")
    return 0


if __name__ == "__main__":
    sys.exit(main())
