"""Rendering of stored run results: metric tables, loss curves, sweep line
plots, and lambda-grid heatmaps, plus the bundled published reference
numbers (clearly labeled as published, not reproduced)."""

from __future__ import annotations

import csv
import json
import os
from importlib import resources

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import ConfigError

METRIC_KEYS = ("acc", "nmi", "ari")


def find_run_dirs(root: str) -> list[str]:
    """Directories under ``root`` (root included) holding a metrics.json."""
    hits = []
    for dirpath, _, filenames in os.walk(root):
        if "metrics.json" in filenames:
            hits.append(dirpath)
    return sorted(hits)


def load_run(run_dir: str) -> dict:
    with open(os.path.join(run_dir, "metrics.json")) as fh:
        payload = json.load(fh)
    payload["run_dir"] = run_dir
    history_path = os.path.join(run_dir, "history.csv")
    payload["history"] = load_history_csv(history_path) if os.path.exists(history_path) else None
    return payload


def load_history_csv(path: str) -> dict[str, list[float]]:
    columns: dict[str, list[float]] = {}
    with open(path) as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            for key, value in row.items():
                columns.setdefault(key, []).append(float(value))
    return columns


def load_published_results() -> list[dict]:
    """Bundled reference scores for the comparison table; all rows carry
    source='published' and were not produced by this package."""
    text = resources.files("ncagc").joinpath("data/published_results.csv").read_text()
    rows = []
    for row in csv.DictReader(filter(lambda line: not line.startswith("#"), text.splitlines())):
        for key in METRIC_KEYS:
            row[key] = float(row[key])
        rows.append(row)
    return rows


def render_loss_curves(history: dict[str, list[float]], out_png: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    epochs = history.get("epoch", list(range(len(history["total"]))))
    for key in ("rec", "nbr", "cse", "coef", "total"):
        if key in history:
            ax.plot(epochs, history[key], label=key)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("symlog")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def write_metrics_table(runs: list[dict], out_csv: str) -> None:
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run_dir", "dataset", "seed", "acc", "nmi", "ari", "wall_seconds"])
        for run in runs:
            metrics = run.get("metrics") or {}
            writer.writerow([
                run["run_dir"], run.get("dataset", ""),
                (run.get("config") or {}).get("seed", ""),
                metrics.get("acc", ""), metrics.get("nmi", ""), metrics.get("ari", ""),
                run.get("wall_seconds", ""),
            ])


def write_comparison_table(runs: list[dict], out_csv: str) -> None:
    """Merge reproduced means with the published reference rows per dataset."""
    by_dataset: dict[str, list[dict]] = {}
    for run in runs:
        if run.get("metrics"):
            by_dataset.setdefault(str(run.get("dataset", "")).lower(), []).append(run["metrics"])
    published = load_published_results()
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "method", "acc", "nmi", "ari", "source"])
        for row in published:
            if by_dataset and row["dataset"] not in by_dataset:
                continue
            writer.writerow([row["dataset"], row["method"], row["acc"], row["nmi"],
                             row["ari"], row["source"]])
        for dataset, reports in sorted(by_dataset.items()):
            n = len(reports)
            writer.writerow([
                dataset, "this package (mean of reproduced runs)",
                sum(m["acc"] for m in reports) / n,
                sum(m["nmi"] for m in reports) / n,
                sum(m["ari"] for m in reports) / n,
                f"reproduced ({n} runs)",
            ])


def _grouped_rows(path: str) -> list[dict]:
    with open(path) as fh:
        return list(csv.DictReader(fh))


def render_sweep_plot(sweep_csv: str, out_dir: str) -> list[str]:
    """One line plot per metric against the swept neighborhood size."""
    rows = _grouped_rows(sweep_csv)
    if not rows:
        raise ConfigError(f"{sweep_csv} holds no rows")
    by_k: dict[int, list[dict]] = {}
    for row in rows:
        by_k.setdefault(int(row["K"]), []).append(row)
    ks = sorted(by_k)
    written = []
    for key in METRIC_KEYS:
        means = [sum(float(r[key]) for r in by_k[k]) / len(by_k[k]) for k in ks]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(ks, means, marker="o")
        ax.set_xlabel("neighborhood size K")
        ax.set_ylabel(key.upper())
        ax.set_title(f"{key.upper()} vs neighborhood size")
        fig.tight_layout()
        out_png = os.path.join(out_dir, f"sweep_{key}.png")
        fig.savefig(out_png, dpi=120)
        plt.close(fig)
        written.append(out_png)
    return written


def render_lambda_heatmaps(grid_csv: str, out_dir: str) -> list[str]:
    """One heatmap per metric over the (lambda1, lambda2) grid."""
    rows = _grouped_rows(grid_csv)
    if not rows:
        raise ConfigError(f"{grid_csv} holds no rows")
    l1s = sorted({float(r["lambda1"]) for r in rows})
    l2s = sorted({float(r["lambda2"]) for r in rows})
    written = []
    for key in METRIC_KEYS:
        grid = [[float("nan")] * len(l2s) for _ in l1s]
        buckets: dict[tuple[float, float], list[float]] = {}
        for r in rows:
            buckets.setdefault((float(r["lambda1"]), float(r["lambda2"])), []).append(float(r[key]))
        for i, a in enumerate(l1s):
            for j, b in enumerate(l2s):
                vals = buckets.get((a, b))
                if vals:
                    grid[i][j] = sum(vals) / len(vals)
        fig, ax = plt.subplots(figsize=(6, 5))
        im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(l2s)), [f"{v:g}" for v in l2s], rotation=45)
        ax.set_yticks(range(len(l1s)), [f"{v:g}" for v in l1s])
        ax.set_xlabel("lambda2")
        ax.set_ylabel("lambda1")
        ax.set_title(f"{key.upper()} over the weight grid")
        fig.colorbar(im, ax=ax)
        fig.tight_layout()
        out_png = os.path.join(out_dir, f"lambda_grid_{key}.png")
        fig.savefig(out_png, dpi=120)
        plt.close(fig)
        written.append(out_png)
    return written
