"""Command-line entry points for experiments: train, ablate, baseline, report.

Every command writes a manifest into its output directory before doing any
work, so a crashed invocation is recognizable by its 'incomplete' status.
All randomness flows from --base-seed/--seeds; repeated invocations with the
same flags reproduce the same outputs.

Exit codes: 0 success, 2 configuration/data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time

import numpy as np

from . import report as reporting
from .clustering import kmeans, spectral_baseline
from .errors import ConfigError, DataError, NumericalError
from .graph_io import Graph, load_dataset, make_toy_graph
from .metrics import evaluate_labels
from .trainer import (ABLATION_VARIANTS, PRESET_NAMES, TrainConfig, config_from_dict,
                      has_preset, parse_config_file, preset_config, run_ablation,
                      run_seeds, summarize_metrics, sweep_neighborhood_size)

logger = logging.getLogger("ncagc")

ENV_DATA_DIR = "NCAGC_DATA_DIR"


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports its own message
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncagc",
                                     description="Attributed-graph clustering experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    train_p = sub.add_parser("train", help="train and evaluate on a dataset")
    _add_run_flags(train_p)
    train_p.add_argument("--k-sweep", default=None,
                         help="comma list of neighborhood sizes to sweep instead of a single run")
    train_p.add_argument("--lambda-grid", default=None,
                         help="comma list of weight values; runs the (lambda1, lambda2) grid")
    train_p.set_defaults(handler=cmd_train)

    ablate_p = sub.add_parser("ablate", help="run the ablation variants side by side")
    _add_run_flags(ablate_p)
    ablate_p.add_argument("--variants", default=",".join(ABLATION_VARIANTS),
                          help=f"comma list out of {ABLATION_VARIANTS}")
    ablate_p.set_defaults(handler=cmd_ablate)

    base_p = sub.add_parser("baseline", help="attribute-only / structure-only baselines")
    _add_run_flags(base_p)
    base_p.add_argument("--method", choices=("kmeans", "spectral", "both"), default="both")
    base_p.set_defaults(handler=cmd_baseline)

    report_p = sub.add_parser("report", help="render tables and plots from stored results")
    report_p.add_argument("--results", required=True, help="directory holding run results")
    report_p.add_argument("--out", default=None, help="output directory (default: <results>/report)")
    report_p.add_argument("--overwrite", action="store_true")
    report_p.set_defaults(handler=cmd_report)
    return parser


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="dataset name (toy, cora, citeseer, wiki, acm)")
    p.add_argument("--data-dir", default=None,
                   help=f"dataset directory (default: ${ENV_DATA_DIR} or ./data)")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--preset", default="table2", choices=PRESET_NAMES,
                   help="named per-dataset defaults")
    p.add_argument("--seeds", type=int, default=1, help="number of seeded repetitions")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=None, help="override the preset epoch count")
    p.add_argument("--out", default=None, help="output directory (default: runs/<command>-<dataset>)")
    p.add_argument("--overwrite", action="store_true",
                   help="allow writing into an existing output directory")


def _resolve_data_dir(args) -> str:
    return args.data_dir or os.environ.get(ENV_DATA_DIR) or "data"


def resolve_graph(name: str, data_dir: str) -> Graph:
    """Map a dataset name to a Graph: built-in 'toy', else files under data_dir."""
    key = name.lower()
    if key == "toy":
        return make_toy_graph()
    candidates = [
        (os.path.join(data_dir, f"{key}.npz"), "archive"),
        (os.path.join(data_dir, key), "edge-list"),
        (os.path.join(data_dir, f"{key}.content"), "edge-list"),
    ]
    for path, fmt in candidates:
        if os.path.exists(path):
            return load_dataset(path, format=fmt, name=key)
    tried = ", ".join(path for path, _ in candidates)
    raise DataError(f"dataset {name!r} not found; looked for: {tried}")


def _assemble_config(args) -> TrainConfig:
    if has_preset(args.dataset):
        config = preset_config(args.dataset, preset=args.preset)
    else:
        # datasets without a bundled preset start from the generic defaults
        config = TrainConfig(dataset=args.dataset.lower())
    if args.config:
        overrides = parse_config_file(args.config)
        merged = config.as_dict()
        merged.update(overrides)
        config = config_from_dict(merged)
    if args.epochs is not None:
        config = config_from_dict({**config.as_dict(), "epochs": args.epochs})
    config = config_from_dict({**config.as_dict(), "seed": args.base_seed})
    return config


def _prepare_out_dir(args, default_name: str) -> str:
    out = args.out or os.path.join("runs", default_name)
    if os.path.exists(out) and os.listdir(out) and not args.overwrite:
        raise ConfigError(f"output directory {out} exists; pass --overwrite to reuse it")
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(out_dir: str, command: str, args, config: TrainConfig | None,
                    seeds: list[int]) -> str:
    path = os.path.join(out_dir, "manifest.json")
    payload = {
        "command": command,
        "argv": {k: v for k, v in vars(args).items() if k != "handler"},
        "config": config.as_dict() if config is not None else None,
        "seeds": seeds,
        "out": out_dir,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "status": "incomplete",
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    return path


def _finish_manifest(path: str) -> None:
    with open(path) as fh:
        payload = json.load(fh)
    payload["status"] = "complete"
    payload["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects a comma list of numbers, got {text!r}") from exc
    if not values:
        raise ConfigError(f"{flag} received an empty list")
    return values


def _print_summary(title: str, summary: dict) -> None:
    print(title)
    for key in ("acc", "nmi", "ari"):
        mean, std = summary.get(f"{key}_mean"), summary.get(f"{key}_std")
        if mean is not None:
            print(f"  {key.upper()}: {mean:.4f} +/- {std:.4f}")


def cmd_train(args) -> int:
    graph = resolve_graph(args.dataset, _resolve_data_dir(args))
    config = _assemble_config(args)
    seeds = [args.base_seed + i for i in range(args.seeds)]
    out_dir = _prepare_out_dir(args, f"train-{args.dataset}")
    manifest = _write_manifest(out_dir, "train", args, config, seeds)

    if args.k_sweep:
        k_values = [int(v) for v in _parse_float_list(args.k_sweep, "--k-sweep")]
        results = sweep_neighborhood_size(graph, config, k_values, seeds=seeds,
                                          out_root=out_dir)
        rows_path = os.path.join(out_dir, "sweep_results.csv")
        with open(rows_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["K", "seed", "acc", "nmi", "ari", "wall_seconds"])
            for result in results:
                m = result.metrics
                writer.writerow([result.config.neighborhood_size, result.config.seed,
                                 m.acc if m else "", m.nmi if m else "", m.ari if m else "",
                                 f"{result.wall_seconds:.2f}"])
        print(f"wrote {rows_path}")
    elif args.lambda_grid:
        values = _parse_float_list(args.lambda_grid, "--lambda-grid")
        rows_path = os.path.join(out_dir, "lambda_grid_results.csv")
        with open(rows_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda1", "lambda2", "seed", "acc", "nmi", "ari"])
            for l1 in values:
                for l2 in values:
                    cfg = config_from_dict({**config.as_dict(),
                                            "lambda_nbr": l1, "lambda_cse": l2})
                    for result in run_seeds(graph, cfg, seeds):
                        m = result.metrics
                        writer.writerow([l1, l2, result.config.seed,
                                         m.acc if m else "", m.nmi if m else "",
                                         m.ari if m else ""])
        print(f"wrote {rows_path}")
    else:
        results = run_seeds(graph, config, seeds, out_root=out_dir)
        summary = summarize_metrics(results)
        with open(os.path.join(out_dir, "metrics_summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2)
        _print_summary(f"{args.dataset}: mean over {len(seeds)} seed(s)", summary)

    _finish_manifest(manifest)
    return 0


def cmd_ablate(args) -> int:
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        if v not in ABLATION_VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; choose from {ABLATION_VARIANTS}")
    graph = resolve_graph(args.dataset, _resolve_data_dir(args))
    config = _assemble_config(args)
    seeds = [args.base_seed + i for i in range(args.seeds)]
    out_dir = _prepare_out_dir(args, f"ablate-{args.dataset}")
    manifest = _write_manifest(out_dir, "ablate", args, config, seeds)

    table = []
    for variant in variants:
        results = []
        for seed in seeds:
            cfg = config_from_dict({**config.as_dict(), "seed": seed})
            results.append(run_ablation(graph, cfg, variant,
                                        out_dir=os.path.join(out_dir, f"{variant}_seed_{seed}")))
        summary = summarize_metrics(results)
        table.append((variant, summary))

    rows_path = os.path.join(out_dir, "ablation_results.csv")
    with open(rows_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "acc_mean", "nmi_mean", "ari_mean", "seeds"])
        for variant, summary in table:
            writer.writerow([variant, summary.get("acc_mean", ""), summary.get("nmi_mean", ""),
                             summary.get("ari_mean", ""), len(seeds)])
    print(f"{'variant':<10} {'ACC':>8} {'NMI':>8} {'ARI':>8}")
    for variant, summary in table:
        print(f"{variant:<10} {summary.get('acc_mean', float('nan')):>8.4f} "
              f"{summary.get('nmi_mean', float('nan')):>8.4f} "
              f"{summary.get('ari_mean', float('nan')):>8.4f}")
    _finish_manifest(manifest)
    return 0


def cmd_baseline(args) -> int:
    graph = resolve_graph(args.dataset, _resolve_data_dir(args))
    if graph.labels is None:
        raise ConfigError(f"dataset {args.dataset!r} has no labels to evaluate against")
    seeds = [args.base_seed + i for i in range(args.seeds)]
    out_dir = _prepare_out_dir(args, f"baseline-{args.dataset}")
    manifest = _write_manifest(out_dir, "baseline", args, None, seeds)

    methods = ["kmeans", "spectral"] if args.method == "both" else [args.method]
    payload = {}
    for method in methods:
        reports = []
        for seed in seeds:
            if method == "kmeans":
                assignment = kmeans(np.asarray(graph.attributes, dtype=np.float64),
                                    graph.num_clusters, seed=seed)
            else:
                assignment = spectral_baseline(graph.adjacency, graph.num_clusters, seed=seed)
            reports.append(evaluate_labels(assignment, graph.labels))
        summary = {
            "acc_mean": float(np.mean([r.acc for r in reports])),
            "acc_std": float(np.std([r.acc for r in reports])),
            "nmi_mean": float(np.mean([r.nmi for r in reports])),
            "nmi_std": float(np.std([r.nmi for r in reports])),
            "ari_mean": float(np.mean([r.ari for r in reports])),
            "ari_std": float(np.std([r.ari for r in reports])),
            "num_runs": len(reports),
        }
        payload[method] = summary
        _print_summary(f"{method} on {args.dataset} ({len(seeds)} seed(s))", summary)
    with open(os.path.join(out_dir, "baseline_metrics.json"), "w") as fh:
        json.dump(payload, fh, indent=2)
    _finish_manifest(manifest)
    return 0


def cmd_report(args) -> int:
    results_dir = args.results
    if not os.path.isdir(results_dir):
        raise ConfigError(f"results directory not found: {results_dir}")
    run_dirs = reporting.find_run_dirs(results_dir)
    sweep_csv = os.path.join(results_dir, "sweep_results.csv")
    grid_csv = os.path.join(results_dir, "lambda_grid_results.csv")
    if not run_dirs and not os.path.exists(sweep_csv) and not os.path.exists(grid_csv):
        raise ConfigError(f"no run results under {results_dir}")
    out_dir = args.out or os.path.join(results_dir, "report")
    if os.path.exists(out_dir) and os.listdir(out_dir) and not args.overwrite:
        raise ConfigError(f"output directory {out_dir} exists; pass --overwrite to reuse it")
    os.makedirs(out_dir, exist_ok=True)
    manifest = _write_manifest(out_dir, "report", args, None, [])

    runs = [reporting.load_run(d) for d in run_dirs]
    written = []
    if runs:
        table = os.path.join(out_dir, "metrics_table.csv")
        reporting.write_metrics_table(runs, table)
        written.append(table)
        comparison = os.path.join(out_dir, "comparison.csv")
        reporting.write_comparison_table(runs, comparison)
        written.append(comparison)
        for run in runs:
            if run.get("history"):
                tag = os.path.relpath(run["run_dir"], results_dir).replace(os.sep, "_")
                png = os.path.join(out_dir, f"loss_{tag}.png")
                reporting.render_loss_curves(run["history"], png,
                                             f"{run.get('dataset', '')} {tag}")
                written.append(png)
    if os.path.exists(sweep_csv):
        written += reporting.render_sweep_plot(sweep_csv, out_dir)
    if os.path.exists(grid_csv):
        written += reporting.render_lambda_heatmaps(grid_csv, out_dir)
    for path in written:
        print(f"wrote {path}")
    _finish_manifest(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
