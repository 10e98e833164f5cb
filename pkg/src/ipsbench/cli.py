"""Experiment orchestration and the ``ips-bench`` command line interface.

An experiment config (JSON, ``schema: 1``) describes datasets x methods x
trials. Running it evaluates every combination, persists the raw metric
matrix, aggregates against the declared baseline and renders reports plus the
comparison plot. Subcommands: run, aggregate, plot, gen-synth, akm.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ipsbench import aggregate as agg
from ipsbench.akm import akm_evaluate
from ipsbench.clustering import RadioMapClusterer
from ipsbench.data import Dataset, SyntheticConfig, generate_synthetic, load_dataset, save_dataset
from ipsbench.distances import DistanceSpec
from ipsbench.gmms import GmmsGrid, render_gmms
from ipsbench.positioning import KnnPositioner, evaluate
from ipsbench.representation import RssRepresentation

SCHEMA_VERSION = 1
METHOD_KINDS = ("plain_knn", "clustered_knn", "akm")
KNOWN_METRICS = (
    "epsilon_3d",
    "tau_db",
    "floor_hit_rate",
    "median",
    "p75",
    "rmse",
    "mse_s1",
    "mse_s2",
    "cr",
)
DEFAULT_METRICS = ("epsilon_3d", "tau_db")


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    pass


@dataclass
class MethodConfig:
    id: str
    kind: str = "plain_knn"
    knn: dict = field(default_factory=dict)
    cluster: dict | None = None
    akm: dict | None = None
    is_baseline: bool = False

    def validate(self) -> None:
        if self.kind not in METHOD_KINDS:
            raise ConfigError(f"method {self.id!r}: unknown kind {self.kind!r}")
        if self.kind == "clustered_knn" and not self.cluster:
            raise ConfigError(f"method {self.id!r}: clustered_knn needs a cluster section")
        if self.kind == "akm" and not self.akm:
            raise ConfigError(f"method {self.id!r}: akm needs an akm section")


@dataclass
class ExperimentConfig:
    datasets: list[dict]
    methods: list[MethodConfig]
    trials: int = 10
    metrics: tuple[str, ...] = DEFAULT_METRICS
    output_dir: str = "out"
    weights: dict | None = None
    parallel_timing_unsafe: bool = False

    def validate(self) -> None:
        if not self.datasets:
            raise ConfigError("at least one dataset required")
        if not self.methods:
            raise ConfigError("at least one method required")
        baselines = [m.id for m in self.methods if m.is_baseline]
        if len(baselines) != 1:
            raise ConfigError(f"exactly one baseline method required, got {baselines}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        unknown = set(self.metrics) - set(KNOWN_METRICS)
        if unknown:
            raise ConfigError(f"unknown metrics: {sorted(unknown)}")
        for m in self.methods:
            m.validate()

    @property
    def baseline_id(self) -> str:
        return next(m.id for m in self.methods if m.is_baseline)


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if raw.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"{path}: expected schema {SCHEMA_VERSION}, got {raw.get('schema')!r}")
    methods = [
        MethodConfig(
            id=m["id"],
            kind=m.get("kind", "plain_knn"),
            knn=m.get("knn", {}),
            cluster=m.get("cluster"),
            akm=m.get("akm"),
            is_baseline=bool(m.get("is_baseline", False)),
        )
        for m in raw.get("methods", [])
    ]
    cfg = ExperimentConfig(
        datasets=raw.get("datasets", []),
        methods=methods,
        trials=int(raw.get("trials", 10)),
        metrics=tuple(raw.get("metrics", DEFAULT_METRICS)),
        output_dir=raw.get("output_dir", "out"),
        weights=raw.get("weights"),
        parallel_timing_unsafe=bool(raw.get("parallel_timing_unsafe", False)),
    )
    cfg.validate()
    return cfg


def resolve_dataset(entry: dict, base_dir: Path | None = None) -> Dataset:
    if "synthetic" in entry:
        spec = dict(entry["synthetic"])
        if "area" in spec:
            spec["area"] = tuple(spec["area"])
        if "name" not in spec and "name" in entry:
            spec["name"] = entry["name"]
        return generate_synthetic(SyntheticConfig(**spec))
    try:
        train, test = entry["train"], entry["test"]
    except KeyError:
        raise ConfigError(f"dataset entry needs train/test paths or a synthetic spec: {entry}")
    if base_dir is not None:
        train, test = base_dir / train, base_dir / test
    return load_dataset(train, test, name=entry.get("name"))


def build_positioner(method: MethodConfig, trial_index: int = 1) -> KnnPositioner:
    knn = method.knn
    representation = RssRepresentation(
        kind=knn.get("representation", "positive"),
        min_rss=knn.get("min_rss", -104.0),
        alpha=knn.get("alpha", 24.0),
        beta=knn.get("beta", float(np.e)),
    )
    spec = DistanceSpec(
        kind=knn.get("distance", "cityblock"),
        sigma=knn.get("sigma", 6.0),
    )
    clusterer = None
    if method.kind == "clustered_knn":
        params = dict(method.cluster or {})
        # stochastic clusterers repartition per trial; the base seed keeps the
        # whole experiment reproducible
        params["seed"] = int(params.get("seed", 0)) + trial_index - 1
        clusterer = RadioMapClusterer(**params)
    return KnnPositioner(
        k=int(knn.get("k", 1)),
        representation=representation,
        distance=spec,
        clusterer=clusterer,
    )


def _evaluate_triple(
    dataset: Dataset, method: MethodConfig, trial: int, metrics: tuple[str, ...]
) -> dict[str, float]:
    """One (method, dataset, trial) evaluation, returning metric values."""
    try:
        if method.kind == "akm":
            result = akm_evaluate(
                dataset,
                k_clusters=int(method.akm["k_clusters"]),
                knn=build_positioner(method, trial),
                original_bits=int(method.akm.get("original_bits", 7)),
            )
            stats = agg.error_stats(result.errors_3d)
            values = {
                "epsilon_3d": result.epsilon_3d,
                "tau_db": result.elapsed_seconds,
                "mse_s1": result.mse_s1,
                "mse_s2": result.mse_s2,
                "cr": result.cr,
                "median": stats["median"],
                "p75": stats["p75"],
                "rmse": stats["rmse"],
            }
        else:
            trial_result = evaluate(dataset, build_positioner(method, trial), trial)
            stats = agg.error_stats(trial_result.errors_3d, trial_result.floor_hits)
            values = {
                "epsilon_3d": stats["mean"],
                "tau_db": trial_result.elapsed_seconds,
                "median": stats["median"],
                "p75": stats["p75"],
                "rmse": stats["rmse"],
            }
            if "floor_hit_rate" in stats:
                values["floor_hit_rate"] = stats["floor_hit_rate"]
    except Exception as exc:
        raise ExperimentError(
            f"evaluation failed for method={method.id!r} dataset={dataset.name!r} "
            f"trial={trial}: {exc}"
        ) from exc
    return {k: v for k, v in values.items() if k in metrics}


def run_experiment(cfg: ExperimentConfig, base_dir: Path | None = None) -> dict[str, Path]:
    """Run the full experiment and write all report files.

    Returns the paths of the written artifacts.
    """
    cfg.validate()
    out = Path(cfg.output_dir)
    datasets = [resolve_dataset(entry, base_dir) for entry in cfg.datasets]
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ConfigError(f"dataset names must be unique, got {names}")

    matrices = {
        name: agg.MetricMatrix(
            name, agg.HIGHER_IS_BETTER if name == "floor_hit_rate" else agg.LOWER_IS_BETTER
        )
        for name in cfg.metrics
    }
    triples = [
        (dataset, method, trial)
        for dataset in datasets
        for method in cfg.methods
        for trial in range(1, cfg.trials + 1)
    ]
    if cfg.parallel_timing_unsafe:
        workers = int(os.environ.get("IPS_BENCH_THREADS", os.cpu_count() or 1))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda t: _evaluate_triple(t[0], t[1], t[2], cfg.metrics), triples)
            )
    else:
        results = [_evaluate_triple(d, m, t, cfg.metrics) for d, m, t in triples]
    for (dataset, method, trial), values in zip(triples, results):
        for metric, value in values.items():
            matrices[metric].record(method.id, dataset.name, trial, value)

    matrices_list = [m for m in matrices.values() if m.values]
    paths = {"raw": out / "raw_metrics.csv"}
    agg.write_raw_csv(matrices_list, paths["raw"])
    paths.update(write_reports(matrices_list, cfg.baseline_id, out, cfg.weights))
    return paths


def write_reports(
    matrices: list[agg.MetricMatrix],
    baseline: str,
    out: Path,
    weights: dict | None = None,
) -> dict[str, Path]:
    aggregated = [agg.aggregate_metric(m, baseline) for m in matrices]
    paths = {
        "aggregate": out / "aggregate.csv",
        "summary": out / "summary.csv",
        "summary_md": out / "summary.md",
    }
    agg.write_aggregate_csv(aggregated, paths["aggregate"])
    agg.write_summary_csv(aggregated, paths["summary"])
    md = agg.summary_markdown(aggregated)
    by_name = {a.metric_name: a for a in aggregated}
    if weights:
        weight_values = {m: w["weight"] if isinstance(w, dict) else w for m, w in weights.items()}
        transforms = {
            m: w.get("transform", "identity")
            for m, w in weights.items()
            if isinstance(w, dict)
        }
        methods = sorted({m for a in aggregated for m in a.cross_scenario})
        md += "\nWeighted scores:\n\n| method | score |\n|---|---|\n"
        for method in methods:
            aggregates = {
                name: by_name[name].cross_scenario[method][0] for name in weight_values
            }
            score = agg.weighted_combine(aggregates, weight_values, transforms)
            md += f"| {method} | {score:.2f} |\n"
    agg.atomic_write(paths["summary_md"], md)
    if "tau_db" in by_name and "epsilon_3d" in by_name:
        grid = grid_from_aggregates(by_name["tau_db"], by_name["epsilon_3d"])
        paths["gmms"] = out / "gmms.svg"
        agg.atomic_write(paths["gmms"], render_gmms(grid))
    return paths


def grid_from_aggregates(
    color: agg.AggregatedMetric, shape: agg.AggregatedMetric
) -> GmmsGrid:
    methods = sorted({m for m, _ in color.per_scenario_normalized})
    scenarios = sorted({s for _, s in color.per_scenario_normalized})
    cells = {
        (m, s): (
            color.per_scenario_normalized[(m, s)],
            shape.per_scenario_normalized[(m, s)],
        )
        for m in methods
        for s in scenarios
    }
    return GmmsGrid(
        methods=methods,
        scenarios=scenarios,
        cells=cells,
        color_label=color.metric_name,
        shape_label=shape.metric_name,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    paths = run_experiment(cfg, base_dir=Path(args.config).parent)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def cmd_aggregate(args) -> int:
    matrices = agg.read_raw_csv(args.raw_csv)
    for m in matrices:
        counts = {
            (method, s): len(m.trials(method, s))
            for method in m.methods()
            for s in m.scenarios()
        }
        if len(set(counts.values())) > 1:
            print(f"warning: inconsistent trial counts for {m.metric_name}", file=sys.stderr)
    paths = write_reports(matrices, args.baseline, Path(args.output_dir))
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def cmd_plot(args) -> int:
    table = agg.read_aggregate_csv(args.aggregate_csv)
    for metric in (args.color, args.shape):
        if metric not in table:
            raise ConfigError(f"metric {metric!r} not present in {args.aggregate_csv}")
    color_cells, shape_cells = table[args.color], table[args.shape]
    methods = sorted({m for m, _ in color_cells})
    scenarios = sorted({s for _, s in color_cells})
    missing = [
        (m, s)
        for m in methods
        for s in scenarios
        if (m, s) not in color_cells or (m, s) not in shape_cells
    ]
    if missing:
        raise ConfigError(f"missing cells for plot: {missing}")
    grid = GmmsGrid(
        methods=methods,
        scenarios=scenarios,
        cells={
            (m, s): (color_cells[(m, s)][1], shape_cells[(m, s)][1])
            for m in methods
            for s in scenarios
        },
        color_label=args.color,
        shape_label=args.shape,
    )
    agg.atomic_write(args.output, render_gmms(grid, cell_px=args.cell_px))
    print(f"gmms: {args.output}")
    return 0


def cmd_gen_synth(args) -> int:
    width, height, floors = (float(v) for v in args.area.split("x"))
    cfg = SyntheticConfig(
        seed=args.seed,
        area=(width, height, int(floors)),
        ap_count=args.ap_count,
        train_count=args.train_count,
        test_count=args.test_count,
        p0=args.p0,
        path_loss_exponent=args.path_loss_exponent,
        noise_sigma=args.noise_sigma,
        detection_threshold=args.detection_threshold,
        name=Path(args.out_prefix).name,
    )
    dataset = generate_synthetic(cfg)
    train_path = Path(f"{args.out_prefix}_train.csv")
    test_path = Path(f"{args.out_prefix}_test.csv")
    train_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, train_path, test_path)
    print(f"train: {train_path}\ntest: {test_path}")
    return 0


def cmd_akm(args) -> int:
    cfg = load_config(args.config)
    ks = sorted({int(v) for v in args.k.split(",")})
    if any(k < 2 for k in ks):
        raise ConfigError("compression sweep needs k >= 2")
    datasets = [resolve_dataset(e, Path(args.config).parent) for e in cfg.datasets]
    metrics = ("mse_s1", "mse_s2", "epsilon_3d", "cr")
    matrices = {name: agg.MetricMatrix(name) for name in metrics}
    for k in ks:
        method_id = f"akm-k{k}"
        for dataset in datasets:
            for trial in range(1, args.trials + 1):
                result = akm_evaluate(dataset, k_clusters=k)
                matrices["mse_s1"].record(method_id, dataset.name, trial, result.mse_s1)
                matrices["mse_s2"].record(method_id, dataset.name, trial, result.mse_s2)
                matrices["epsilon_3d"].record(method_id, dataset.name, trial, result.epsilon_3d)
                matrices["cr"].record(method_id, dataset.name, trial, result.cr)
    baseline = f"akm-k{ks[0]}"
    aggregated = {name: agg.aggregate_metric(m, baseline) for name, m in matrices.items()}
    weights = {"mse_s1": 0.05, "mse_s2": 0.05, "epsilon_3d": 0.9, "cr": 0.2}
    transforms = {"epsilon_3d": "square", "cr": "one_minus"}
    out = Path(args.output_dir)
    lines = ["k,mse_s1,mse_s2,epsilon_3d,cr,score"]
    print("k    mse_s1  mse_s2  eps_3d  cr      score")
    for k in ks:
        method_id = f"akm-k{k}"
        row = {name: aggregated[name].cross_scenario[method_id][0] for name in metrics}
        score = agg.weighted_combine(row, weights, transforms)
        lines.append(
            f"{k},{row['mse_s1']!r},{row['mse_s2']!r},{row['epsilon_3d']!r},{row['cr']!r},{score!r}"
        )
        print(
            f"{k:<4} {row['mse_s1']:<7.3f} {row['mse_s2']:<7.3f} "
            f"{row['epsilon_3d']:<7.2f} {row['cr']:<7.2f} {score:.2f}"
        )
    agg.write_raw_csv(list(matrices.values()), out / "akm_raw.csv")
    agg.atomic_write(out / "akm_sweep.csv", "\n".join(lines) + "\n")
    print(f"report: {out / 'akm_sweep.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ips-bench",
        description="Benchmark indoor-positioning methods across datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--output-dir", default=None)
    p_run.set_defaults(func=cmd_run)

    p_agg = sub.add_parser("aggregate", help="aggregate raw metric CSVs")
    p_agg.add_argument("raw_csv", nargs="+")
    p_agg.add_argument("--baseline", required=True)
    p_agg.add_argument("--output-dir", default="out")
    p_agg.set_defaults(func=cmd_aggregate)

    p_plot = sub.add_parser("plot", help="render the comparison plot from an aggregate CSV")
    p_plot.add_argument("aggregate_csv")
    p_plot.add_argument("--color", default="tau_db")
    p_plot.add_argument("--shape", default="epsilon_3d")
    p_plot.add_argument("-o", "--output", required=True)
    p_plot.add_argument("--cell-px", type=int, default=60)
    p_plot.set_defaults(func=cmd_plot)

    p_gen = sub.add_parser("gen-synth", help="generate a synthetic dataset as CSV")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--area", default="40x20x1", help="WIDTHxHEIGHTxFLOORS")
    p_gen.add_argument("--ap-count", type=int, default=8)
    p_gen.add_argument("--train-count", type=int, default=200)
    p_gen.add_argument("--test-count", type=int, default=50)
    p_gen.add_argument("--p0", type=float, default=-40.0)
    p_gen.add_argument("--path-loss-exponent", type=float, default=2.0)
    p_gen.add_argument("--noise-sigma", type=float, default=2.0)
    p_gen.add_argument("--detection-threshold", type=float, default=-100.0)
    p_gen.add_argument("--out-prefix", required=True)
    p_gen.set_defaults(func=cmd_gen_synth)

    p_akm = sub.add_parser("akm", help="compression parameter sweep")
    p_akm.add_argument("--k", default="2,4,7,15,25,35")
    p_akm.add_argument("--config", required=True)
    p_akm.add_argument("--trials", type=int, default=1)
    p_akm.add_argument("--output-dir", default="out")
    p_akm.set_defaults(func=cmd_akm)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExperimentError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
