"""Render experiment results to PNG files next to the delimited output."""
from __future__ import annotations

import os
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import ExperimentResult  # noqa: E402

_DPI = 150


def _save(fig, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def render_experiment(result: ExperimentResult, out_dir: str) -> List[str]:
    """Figure files for one experiment; empty when there is nothing to plot."""
    os.makedirs(out_dir, exist_ok=True)
    if result.experiment in ("utility_sweep", "invariants"):
        return [_utility_sweep(result, out_dir)]
    if result.experiment == "robustness":
        return [_robustness(result, out_dir)]
    if result.experiment == "adaptation":
        return [_adaptation(result, out_dir)]
    if result.experiment == "scaling":
        return [_scaling(result, out_dir)]
    return []


def _utility_sweep(result: ExperimentResult, out_dir: str) -> str:
    vs = [rec.report.v for rec in result.records]
    utils = [rec.report.utility for rec in result.records]
    delays = [rec.report.avg_delay for rec in result.records]
    opt = result.records[0].oracle_optimum
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(vs, utils, "o-", label="achieved")
    ax1.axhline(opt, ls="--", color="gray", label="optimum")
    ax1.set_xscale("log")
    ax1.set_xlabel("V")
    ax1.set_ylabel("aggregate utility")
    ax1.legend()
    ax2.plot(vs, delays, "s-", color="tab:red")
    ax2.set_xscale("log")
    ax2.set_xlabel("V")
    ax2.set_ylabel("average delay (slots)")
    fig.tight_layout()
    return _save(fig, out_dir, f"{result.experiment}.png")


def _robustness(result: ExperimentResult, out_dir: str) -> str:
    labels = [rec.label for rec in result.records]
    utils = [rec.report.utility for rec in result.records]
    delays = [rec.report.avg_delay for rec in result.records]
    opt = result.records[0].oracle_optimum
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.bar(labels, utils, color="tab:blue")
    ax1.axhline(opt, ls="--", color="gray")
    ax1.set_ylabel("aggregate utility")
    ax1.tick_params(axis="x", rotation=20)
    ax2.bar(labels, delays, color="tab:red")
    ax2.set_ylabel("average delay (slots)")
    ax2.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    return _save(fig, out_dir, "robustness.png")


def _adaptation(result: ExperimentResult, out_dir: str) -> str:
    rep = result.records[0].report
    series = rep.series_total_physical
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(series, lw=0.8)
    if len(rep.phases) > 1:
        ax.axvline(rep.phases[-1].start, ls="--", color="gray", label="utility switch")
        ax.legend()
    ax.set_xlabel("slot")
    ax.set_ylabel("total queued packets")
    fig.tight_layout()
    return _save(fig, out_dir, "adaptation.png")


def _scaling(result: ExperimentResult, out_dir: str) -> str:
    ns = [row["n"] for row in result.scaling_rows]
    plain = [row["avg_delay"] for row in result.scaling_rows]
    biased = [row["enhanced_delay"] for row in result.scaling_rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(ns, plain, "o-", label="plain")
    ax.plot(ns, biased, "s-", label="destination biased")
    if plain:
        c = plain[-1] / ns[-1] ** 2
        ax.plot(ns, [c * nv ** 2 for nv in ns], ls="--", color="gray",
                label="quadratic reference")
    ax.set_xlabel("fabric order n")
    ax.set_ylabel("average delay (slots)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "scaling.png")
