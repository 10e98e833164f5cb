"""Metric aggregation: trial averaging, baseline normalization, cross-scenario
statistics, summary error statistics and weighted combination.

The pipeline is: record one value per (method, scenario, trial), average over
trials, divide by the baseline method's trial average in the same scenario,
then report the mean and sample standard deviation of those normalized values
across scenarios. A weighted combination can fold several such aggregates into
a single score.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LOWER_IS_BETTER = "lower"
HIGHER_IS_BETTER = "higher"

TRANSFORMS = {
    "identity": lambda v: v,
    "square": lambda v: v * v,
    "one_minus": lambda v: 1.0 - v,
}


class AggregationError(ValueError):
    pass


def error_stats(errors_3d, floor_hits=None) -> dict[str, float]:
    """Summary statistics of per-sample positioning errors.

    Quartiles use linear interpolation between order statistics.
    """
    errors = np.asarray(errors_3d, dtype=float)
    if errors.size == 0:
        raise AggregationError("empty error list")
    stats = {
        "mean": float(errors.mean()),
        "median": float(np.percentile(errors, 50)),
        "p75": float(np.percentile(errors, 75)),
        "rmse": float(math.sqrt(np.mean(errors**2))),
    }
    if floor_hits is not None:
        hits = np.asarray(floor_hits, dtype=bool)
        stats["floor_hit_rate"] = float(hits.mean())
    return stats


def aggregate_trials(values) -> float:
    """Trial average of one (method, scenario) cell."""
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        raise AggregationError("no trials to aggregate")
    return float(values.mean())


def normalize_to_baseline(mean_method: float, mean_baseline: float) -> float:
    """Ratio of a method's trial average to the baseline's, per scenario."""
    if mean_baseline <= 0:
        raise AggregationError(
            f"baseline value {mean_baseline} is not positive; ratio normalization unusable"
        )
    return mean_method / mean_baseline


def aggregate_scenarios(normalized) -> tuple[float, float]:
    """Cross-scenario mean and sample standard deviation (ddof=1; 0 for N=1)."""
    values = np.asarray(list(normalized), dtype=float)
    if values.size == 0:
        raise AggregationError("no scenarios to aggregate")
    mean = float(values.mean())
    std = 0.0 if values.size == 1 else float(values.std(ddof=1))
    return mean, std


def weighted_combine(
    aggregates: dict[str, float],
    weights: dict[str, float],
    transforms: dict[str, str] | None = None,
) -> float:
    """Weighted combination of cross-scenario aggregates into one score.

    ``transforms`` maps metric names to ``identity`` (default), ``square`` or
    ``one_minus``.
    """
    if not weights or all(w == 0 for w in weights.values()):
        raise AggregationError("at least one nonzero weight required")
    transforms = transforms or {}
    total = 0.0
    for metric, weight in weights.items():
        if metric not in aggregates:
            raise AggregationError(f"metric {metric!r} missing from aggregates")
        name = transforms.get(metric, "identity")
        if name not in TRANSFORMS:
            raise AggregationError(f"unknown transform {name!r}")
        total += weight * TRANSFORMS[name](aggregates[metric])
    return total


@dataclass
class MetricMatrix:
    """Raw per-(method, scenario, trial) values of one metric."""

    metric_name: str
    orientation: str = LOWER_IS_BETTER
    values: dict[tuple[str, str, int], float] = field(default_factory=dict)

    def record(self, method: str, scenario: str, trial: int, value: float) -> None:
        if not math.isfinite(value):
            raise AggregationError(
                f"non-finite value for {self.metric_name} at ({method}, {scenario}, {trial})"
            )
        self.values[(method, scenario, trial)] = value

    def methods(self) -> list[str]:
        return sorted({m for m, _, _ in self.values})

    def scenarios(self) -> list[str]:
        return sorted({s for _, s, _ in self.values})

    def trials(self, method: str, scenario: str) -> list[float]:
        cell = [
            (t, v) for (m, s, t), v in self.values.items() if m == method and s == scenario
        ]
        return [v for _, v in sorted(cell)]


@dataclass
class AggregatedMetric:
    """Per-scenario means and normalized values plus cross-scenario stats."""

    metric_name: str
    baseline_method: str
    per_scenario_mean: dict[tuple[str, str], float]
    per_scenario_normalized: dict[tuple[str, str], float]
    cross_scenario: dict[str, tuple[float, float]]  # method -> (mean, std)


def aggregate_metric(matrix: MetricMatrix, baseline: str) -> AggregatedMetric:
    """Run the full trial-average / normalize / cross-scenario pipeline."""
    if baseline not in matrix.methods():
        raise AggregationError(f"unknown baseline method {baseline!r}")
    means: dict[tuple[str, str], float] = {}
    normalized: dict[tuple[str, str], float] = {}
    for method in matrix.methods():
        for scenario in matrix.scenarios():
            trials = matrix.trials(method, scenario)
            if trials:
                means[(method, scenario)] = aggregate_trials(trials)
    cross: dict[str, tuple[float, float]] = {}
    for method in matrix.methods():
        ratios = []
        for scenario in matrix.scenarios():
            if (method, scenario) not in means:
                continue
            base = means.get((baseline, scenario))
            if base is None:
                raise AggregationError(
                    f"baseline {baseline!r} has no value for scenario {scenario!r}"
                )
            ratio = normalize_to_baseline(means[(method, scenario)], base)
            normalized[(method, scenario)] = ratio
            ratios.append(ratio)
        cross[method] = aggregate_scenarios(ratios)
    return AggregatedMetric(
        metric_name=matrix.metric_name,
        baseline_method=baseline,
        per_scenario_mean=means,
        per_scenario_normalized=normalized,
        cross_scenario=cross,
    )


# ---------------------------------------------------------------------------
# CSV / Markdown interchange
# ---------------------------------------------------------------------------

RAW_HEADER = ["metric", "method", "scenario", "trial", "value"]
AGG_HEADER = ["metric", "method", "scenario", "mean", "normalized"]
SUMMARY_HEADER = ["metric", "method", "cross_mean", "cross_std"]


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_raw_csv(matrices: list[MetricMatrix], path: str | Path) -> None:
    lines = [",".join(RAW_HEADER)]
    for matrix in matrices:
        for (method, scenario, trial), value in sorted(matrix.values.items()):
            lines.append(f"{matrix.metric_name},{method},{scenario},{trial},{value!r}")
    atomic_write(path, "\n".join(lines) + "\n")


def read_raw_csv(paths) -> list[MetricMatrix]:
    """Read one or more raw metric CSVs, merging rows by metric name."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    matrices: dict[str, MetricMatrix] = {}
    for path in paths:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != RAW_HEADER:
                raise AggregationError(f"{path}: expected header {','.join(RAW_HEADER)}")
            for i, row in enumerate(reader, start=2):
                try:
                    trial = int(row["trial"])
                    value = float(row["value"])
                except (TypeError, ValueError):
                    raise AggregationError(f"{path}: row {i}: malformed trial/value") from None
                matrix = matrices.setdefault(row["metric"], MetricMatrix(row["metric"]))
                matrix.record(row["method"], row["scenario"], trial, value)
    return list(matrices.values())


def write_aggregate_csv(aggregated: list[AggregatedMetric], path: str | Path) -> None:
    lines = [",".join(AGG_HEADER)]
    for agg in aggregated:
        for (method, scenario), mean in sorted(agg.per_scenario_mean.items()):
            norm = agg.per_scenario_normalized[(method, scenario)]
            lines.append(f"{agg.metric_name},{method},{scenario},{mean!r},{norm!r}")
    atomic_write(path, "\n".join(lines) + "\n")


def write_summary_csv(aggregated: list[AggregatedMetric], path: str | Path) -> None:
    lines = [",".join(SUMMARY_HEADER)]
    for agg in aggregated:
        for method, (mean, std) in sorted(agg.cross_scenario.items()):
            lines.append(f"{agg.metric_name},{method},{mean!r},{std!r}")
    atomic_write(path, "\n".join(lines) + "\n")


def read_aggregate_csv(path: str | Path) -> dict[str, dict[tuple[str, str], tuple[float, float]]]:
    """Aggregate CSV as {metric: {(method, scenario): (mean, normalized)}}."""
    out: dict[str, dict[tuple[str, str], tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != AGG_HEADER:
            raise AggregationError(f"{path}: expected header {','.join(AGG_HEADER)}")
        for row in reader:
            out.setdefault(row["metric"], {})[(row["method"], row["scenario"])] = (
                float(row["mean"]),
                float(row["normalized"]),
            )
    return out


def summary_markdown(aggregated: list[AggregatedMetric]) -> str:
    """Cross-scenario summary as a Markdown table: methods x metrics."""
    metrics = [agg.metric_name for agg in aggregated]
    methods = sorted({m for agg in aggregated for m in agg.cross_scenario})
    header = "| method | " + " | ".join(metrics) + " |"
    rule = "|" + "---|" * (len(metrics) + 1)
    lines = [header, rule]
    for method in methods:
        cells = []
        for agg in aggregated:
            if method in agg.cross_scenario:
                mean, std = agg.cross_scenario[method]
                cells.append(f"{mean:.2f} ({std:.2f})")
            else:
                cells.append("-")
        lines.append(f"| {method} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
