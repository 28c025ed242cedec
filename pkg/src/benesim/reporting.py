"""Delimited result files: a run summary plus optional per-slot tables.

All numbers print with six significant digits and fields keep a fixed
order, so identical inputs yield byte-identical files.
"""
from __future__ import annotations

import os
from typing import Dict, List, Sequence

from .experiments import ExperimentResult, RunRecord

SUMMARY_COLUMNS = (
    "experiment", "label", "n", "V", "eta", "A_max", "slots", "seed", "variant",
    "bias_enhanced", "total_utility", "oracle_optimum", "utility_gap_pct",
    "avg_delay_slots", "delivery_fraction", "slack_admission", "slack_regulation",
    "slack_source", "slack_switch", "slack_partition",
)

TIMESERIES_COLUMNS = ("slot", "total_physical_queue", "total_fictitious_queue",
                      "admitted_cum", "delivered_cum")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def summary_row(experiment: str, rec: RunRecord) -> Dict[str, object]:
    rep = rec.report
    return {
        "experiment": experiment,
        "label": rec.label,
        "n": rep.n,
        "V": rep.v,
        "eta": rep.eta,
        "A_max": rep.a_max,
        "slots": rep.slots,
        "seed": rep.seed,
        "variant": rep.variant,
        "bias_enhanced": rep.bias_enhanced,
        "total_utility": rep.utility,
        "oracle_optimum": rec.oracle_optimum,
        "utility_gap_pct": rec.utility_gap_pct,
        "avg_delay_slots": rep.avg_delay,
        "delivery_fraction": rep.delivery_fraction,
        "slack_admission": rep.min_slack["admission"],
        "slack_regulation": rep.min_slack["regulation"],
        "slack_source": rep.min_slack["source"],
        "slack_switch": rep.min_slack["switch"],
        "slack_partition": rep.min_slack["partition"],
    }


def _write_rows(path: str, columns: Sequence[str], rows: List[Dict[str, object]]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary(result: ExperimentResult, out_dir: str) -> str:
    rows = [summary_row(result.experiment, rec) for rec in result.records]
    path = os.path.join(out_dir, "summary.csv")
    _write_rows(path, SUMMARY_COLUMNS, rows)
    return path


def write_timeseries(rec: RunRecord, out_dir: str) -> str:
    rep = rec.report
    safe = rec.label.replace("=", "").replace("+", "_").replace("@", "_")
    path = os.path.join(out_dir, f"timeseries_{safe}.csv")
    lines = [",".join(TIMESERIES_COLUMNS)]
    phys = rep.series_total_physical
    fict = rep.series_total_fictitious
    adm = rep.series_admitted_cum
    dlv = rep.series_delivered_cum
    for t in range(rep.slots):
        lines.append(f"{t},{phys[t]},{format(float(fict[t]), '.6g')},{adm[t]},{dlv[t]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_scaling_table(result: ExperimentResult, out_dir: str) -> str:
    columns = ("n", "avg_delay", "avg_delay_over_n2", "enhanced_delay",
               "enhanced_delay_over_n2")
    path = os.path.join(out_dir, "scaling_table.csv")
    _write_rows(path, columns, result.scaling_rows)
    return path


def write_adaptation_rates(result: ExperimentResult, out_dir: str) -> str:
    columns = ("weight_class", "mean_rate")
    rows = [{"weight_class": w, "mean_rate": r}
            for w, r in sorted(result.adaptation_rates.items())]
    path = os.path.join(out_dir, "adaptation_rates.csv")
    _write_rows(path, columns, rows)
    return path


def write_capacity_table(result: ExperimentResult, out_dir: str) -> str:
    columns = ("n", "samples", "violations", "seconds")
    path = os.path.join(out_dir, "capacity_check.csv")
    _write_rows(path, columns, result.capacity_rows)
    return path


def emit_results(result: ExperimentResult, out_dir: str, timeseries: bool = False) -> List[str]:
    """Write every file an experiment produces; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if result.records:
        paths.append(write_summary(result, out_dir))
    if result.experiment == "adaptation":
        paths.extend(write_timeseries(rec, out_dir) for rec in result.records)
        paths.append(write_adaptation_rates(result, out_dir))
    elif timeseries:
        paths.extend(write_timeseries(rec, out_dir) for rec in result.records)
    if result.scaling_rows:
        paths.append(write_scaling_table(result, out_dir))
    if result.capacity_rows:
        paths.append(write_capacity_table(result, out_dir))
    return paths
