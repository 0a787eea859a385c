"""End-to-end training: joint first-order optimization of the autoencoder
and the self-expression coefficients under the weighted composite loss,
with per-epoch neighbor refresh, optional in-loop clustering evaluation,
ablation variants, and the neighborhood-size sweep.

A run is deterministic for a fixed (graph, config, seed) on one machine:
all randomness flows from the config seed.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from . import losses
from .clustering import cluster_from_coefficients
from .errors import ConfigError, NumericalError
from .graph_io import NORMALIZATION_MODES, Graph, add_self_loops, normalize_attributes
from .knn import knn_positive_mask
from .losses import LossBreakdown
from .metrics import MetricReport, evaluate_labels
from .model import ACTIVATIONS, GNN_KINDS, GraphAutoencoder
from .self_expression import SelfExpressionLayer

logger = logging.getLogger("ncagc")

KNN_SOURCES = ("latent", "attributes")
CSE_MODES = ("contrastive", "plain")
ABLATION_VARIANTS = ("full", "wo_nbr", "wo_cse", "wo_att")
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Everything a run needs; defaults are overridden by per-dataset presets."""

    dataset: str = "toy"
    learning_rate: float = 1e-4
    epochs: int = 400
    hidden_dims: tuple[int, ...] = (1024, 512)
    gnn_kind: str = "attention"
    activation: str = "prelu"
    neighborhood_size: int = 10
    lambda_nbr: float = 10.0
    lambda_cse: float = 10.0
    lambda_coef: float = 10.0
    knn_source: str = "latent"
    knn_refresh_every: int = 1
    energy_fraction: float = 1.0
    rank_multiplier: int = 4
    affinity_smoothing: bool = True
    cse_mode: str = "contrastive"
    nbr_enabled: bool = True
    seed: int = 0
    eval_every: int = 0  # 0: evaluate only after the last epoch
    attribute_normalization: str = "row-l1"
    temperature: float = 1.0
    coef_squared_norm: bool = True
    nbr_denominator_excludes_positives: bool = False
    kmeans_restarts: int = 10

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.neighborhood_size < 1:
            raise ConfigError(f"neighborhood_size must be >= 1, got {self.neighborhood_size}")
        if min(self.lambda_nbr, self.lambda_cse, self.lambda_coef) < 0:
            raise ConfigError("loss weights must be nonnegative")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not self.hidden_dims or any(int(d) < 1 for d in self.hidden_dims):
            raise ConfigError(f"invalid hidden_dims {self.hidden_dims}")
        if self.gnn_kind not in GNN_KINDS:
            raise ConfigError(f"gnn_kind must be one of {GNN_KINDS}, got {self.gnn_kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.knn_source not in KNN_SOURCES:
            raise ConfigError(f"knn_source must be one of {KNN_SOURCES}, got {self.knn_source!r}")
        if self.cse_mode not in CSE_MODES:
            raise ConfigError(f"cse_mode must be one of {CSE_MODES}, got {self.cse_mode!r}")
        if self.knn_refresh_every < 1:
            raise ConfigError(f"knn_refresh_every must be >= 1, got {self.knn_refresh_every}")
        if self.eval_every < 0:
            raise ConfigError(f"eval_every must be >= 0, got {self.eval_every}")
        if self.attribute_normalization not in NORMALIZATION_MODES:
            raise ConfigError(f"unknown attribute normalization {self.attribute_normalization!r}")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if not 0.0 < self.energy_fraction <= 1.0:
            raise ConfigError(f"energy_fraction must be in (0, 1], got {self.energy_fraction}")
        if self.rank_multiplier < 1:
            raise ConfigError(f"rank_multiplier must be >= 1, got {self.rank_multiplier}")
        if self.kmeans_restarts < 1:
            raise ConfigError(f"kmeans_restarts must be >= 1, got {self.kmeans_restarts}")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d


# Published per-dataset defaults ("table2" preset). The alternative "prose"
# preset differs only for citeseer, where two weightings circulate.
_PRESET_TABLE = {
    "cora": dict(learning_rate=1e-4, hidden_dims=(1024, 512), epochs=400,
                 lambda_nbr=10.0, lambda_cse=10.0, lambda_coef=10.0,
                 attribute_normalization="row-l1"),
    "citeseer": dict(learning_rate=1e-4, hidden_dims=(1024, 1024), epochs=200,
                     lambda_nbr=100.0, lambda_cse=1.0, lambda_coef=1.0,
                     attribute_normalization="row-l1"),
    "wiki": dict(learning_rate=1e-4, hidden_dims=(1024, 512), epochs=300,
                 lambda_nbr=10.0, lambda_cse=1.0, lambda_coef=10.0,
                 attribute_normalization="none"),
    "acm": dict(learning_rate=5e-4, hidden_dims=(1024, 512), epochs=200,
                lambda_nbr=100.0, lambda_cse=200.0, lambda_coef=3500.0,
                attribute_normalization="row-l1"),
    "toy": dict(learning_rate=1e-3, hidden_dims=(32, 16), epochs=60,
                neighborhood_size=5, lambda_nbr=1.0, lambda_cse=1.0,
                lambda_coef=1.0, attribute_normalization="none"),
}

PRESET_NAMES = ("table2", "prose")


def has_preset(dataset: str) -> bool:
    return dataset.lower() in _PRESET_TABLE


def preset_config(dataset: str, preset: str = "table2", **overrides) -> TrainConfig:
    """Per-dataset default configuration, with optional field overrides."""
    if preset not in PRESET_NAMES:
        raise ConfigError(f"preset must be one of {PRESET_NAMES}, got {preset!r}")
    key = dataset.lower()
    if key not in _PRESET_TABLE:
        raise ConfigError(f"no preset for dataset {dataset!r}; "
                          f"known: {sorted(_PRESET_TABLE)}")
    fields = dict(_PRESET_TABLE[key])
    if preset == "prose" and key == "citeseer":
        fields["lambda_nbr"] = 10.0
    fields.update(overrides)
    config = TrainConfig(dataset=key, **fields)
    config.validate()
    return config


@dataclass
class RunResult:
    """Outcome of one training run."""

    metrics: MetricReport | None
    history: list[LossBreakdown]
    eval_history: list[tuple[int, MetricReport]]
    wall_seconds: float
    config: TrainConfig
    checkpoint_path: str | None = None
    notes: list[str] = field(default_factory=list)


def _knn_mask_tensor(source: np.ndarray, k: int) -> torch.Tensor:
    return torch.as_tensor(knn_positive_mask(source, k).mask)


def train(graph: Graph, config: TrainConfig, out_dir: str | None = None) -> RunResult:
    """Run the joint optimization loop and (when labels exist) a final
    clustering evaluation; optionally persist artifacts under ``out_dir``."""
    config.validate()
    started = time.perf_counter()
    torch.manual_seed(config.seed)

    prepared = normalize_attributes(graph, config.attribute_normalization)
    x = torch.as_tensor(prepared.attributes, dtype=torch.float32)
    adjacency = torch.as_tensor(add_self_loops(prepared.adjacency), dtype=torch.float32)

    model = GraphAutoencoder(prepared.num_features, config.hidden_dims,
                             gnn_kind=config.gnn_kind, activation=config.activation)
    self_expr = SelfExpressionLayer(prepared.num_nodes)
    optimizer = torch.optim.Adam(
        list(model.parameters()) + list(self_expr.parameters()),
        lr=config.learning_rate,
    )

    weights = (config.lambda_nbr, config.lambda_cse, config.lambda_coef)
    nbr_active = config.nbr_enabled and config.lambda_nbr != 0.0
    cse_active = config.lambda_cse != 0.0
    coef_active = config.lambda_coef != 0.0

    history: list[LossBreakdown] = []
    eval_history: list[tuple[int, MetricReport]] = []
    notes: list[str] = []
    positive_mask: torch.Tensor | None = None
    log_stride = max(1, config.epochs // 10)

    for epoch in range(config.epochs):
        try:
            z = model.encode(x, adjacency)
            if nbr_active and (positive_mask is None or epoch % config.knn_refresh_every == 0):
                if config.knn_source == "latent":
                    source = z.detach().numpy()
                    positive_mask = _knn_mask_tensor(source, config.neighborhood_size)
                elif positive_mask is None:  # attributes never change
                    positive_mask = _knn_mask_tensor(prepared.attributes, config.neighborhood_size)
            z_hat = self_expr(z)
            x_hat = model.decode(z_hat, adjacency)

            rec = losses.reconstruction_loss(x, x_hat)
            zero = torch.zeros((), dtype=rec.dtype)
            nbr = (
                losses.neighborhood_contrast_loss(
                    z, positive_mask, temperature=config.temperature,
                    exclude_positives_from_denominator=config.nbr_denominator_excludes_positives)
                if nbr_active else zero
            )
            if cse_active:
                if config.cse_mode == "contrastive":
                    cse = losses.contrastive_self_expression_loss(
                        z, z_hat, temperature=config.temperature)
                else:
                    cse = losses.plain_self_expression_loss(z, z_hat)
            else:
                cse = zero
            coef = self_expr.regularizer(squared=config.coef_squared_norm) if coef_active else zero

            breakdown = losses.total_loss(rec.item(), nbr.item(), cse.item(),
                                          coef.item(), weights)
            objective = (rec + config.lambda_nbr * nbr + config.lambda_cse * cse
                         + config.lambda_coef * coef)
            optimizer.zero_grad()
            objective.backward()
            optimizer.step()
        except NumericalError as exc:
            raise NumericalError("training aborted", component=exc.component,
                                 epoch=epoch, layer=exc.layer) from exc
        history.append(breakdown)
        if epoch % log_stride == 0:
            logger.debug("epoch %d: total=%.6g rec=%.6g", epoch, breakdown.total, breakdown.rec)

        is_last = epoch == config.epochs - 1
        if (graph.labels is not None and config.eval_every > 0
                and (epoch + 1) % config.eval_every == 0 and not is_last):
            report = _try_evaluate(self_expr, graph, config, epoch, notes)
            if report is not None:
                eval_history.append((epoch, report))

    final_metrics = None
    if graph.labels is not None:
        final_metrics = _try_evaluate(self_expr, graph, config, config.epochs - 1, notes)
        if final_metrics is not None:
            eval_history.append((config.epochs - 1, final_metrics))

    wall = time.perf_counter() - started
    checkpoint_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        checkpoint_path = os.path.join(out_dir, "checkpoint.pt")
        save_checkpoint(checkpoint_path, model, self_expr, config, graph.name)
        write_history_csv(history, os.path.join(out_dir, "history.csv"))
        _write_run_json(os.path.join(out_dir, "metrics.json"), final_metrics, wall,
                        config, graph.name, notes)
        np.save(os.path.join(out_dir, "coefficients.npy"),
                self_expr.effective_coefficients().detach().numpy())

    return RunResult(metrics=final_metrics, history=history, eval_history=eval_history,
                     wall_seconds=wall, config=config, checkpoint_path=checkpoint_path,
                     notes=notes)


def _try_evaluate(self_expr: SelfExpressionLayer, graph: Graph, config: TrainConfig,
                  epoch: int, notes: list[str]) -> MetricReport | None:
    coefficients = self_expr.effective_coefficients().detach().numpy()
    try:
        return _evaluate_coefficients(coefficients, graph, config)
    except NumericalError as exc:
        notes.append(f"evaluation failed at epoch {epoch}: {exc}")
        logger.warning("evaluation failed at epoch %d: %s", epoch, exc)
        return None


def _evaluate_coefficients(coefficients: np.ndarray, graph: Graph,
                           config: TrainConfig) -> MetricReport:
    if graph.labels is None:
        raise ConfigError("evaluation needs ground-truth labels")
    assignment, _ = cluster_from_coefficients(
        coefficients, graph.num_clusters,
        energy_fraction=config.energy_fraction,
        rank_multiplier=config.rank_multiplier,
        smoothing=config.affinity_smoothing,
        seed=config.seed,
        restarts=config.kmeans_restarts,
    )
    return evaluate_labels(assignment, graph.labels)


def save_checkpoint(path: str, model: GraphAutoencoder, self_expr: SelfExpressionLayer,
                    config: TrainConfig, graph_name: str) -> None:
    torch.save({
        "format_version": CHECKPOINT_VERSION,
        "model_state": model.state_dict(),
        "self_expression_state": self_expr.state_dict(),
        "config": config.as_dict(),
        "graph_name": graph_name,
    }, path)


def load_checkpoint(path: str) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version in {path}")
    return payload


def config_from_dict(data: dict) -> TrainConfig:
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "hidden_dims" in data:
        data = dict(data, hidden_dims=tuple(int(d) for d in data["hidden_dims"]))
    config = TrainConfig(**data)
    config.validate()
    return config


def evaluate(checkpoint, graph: Graph, seed: int | None = None) -> MetricReport:
    """Cluster and score from a stored checkpoint; no parameter updates.

    ``checkpoint`` is a path or an already-loaded payload dict. Reproduces
    the final metrics of the run that wrote it when the seed matches.
    """
    payload = load_checkpoint(checkpoint) if isinstance(checkpoint, (str, os.PathLike)) else checkpoint
    coefficients = payload["self_expression_state"]["coefficients"].detach().cpu().numpy()
    if coefficients.shape[0] != graph.num_nodes:
        raise ConfigError(
            f"checkpoint has {coefficients.shape[0]} nodes but graph has {graph.num_nodes}")
    config = config_from_dict(payload["config"])
    if seed is not None:
        config = replace(config, seed=seed)
    eye = np.eye(coefficients.shape[0], dtype=bool)
    coefficients = np.where(eye, 0.0, coefficients)
    return _evaluate_coefficients(coefficients, graph, config)


def run_ablation(graph: Graph, base_config: TrainConfig, variant: str,
                 out_dir: str | None = None) -> RunResult:
    """Train one ablation variant: full, wo_nbr (drop the neighborhood term),
    wo_cse (plain self-expression loss), or wo_att (mean aggregation)."""
    if variant not in ABLATION_VARIANTS:
        raise ConfigError(f"variant must be one of {ABLATION_VARIANTS}, got {variant!r}")
    config = base_config
    if variant == "wo_nbr":
        config = replace(config, nbr_enabled=False)
    elif variant == "wo_cse":
        config = replace(config, cse_mode="plain")
    elif variant == "wo_att":
        config = replace(config, gnn_kind="mean-aggregation")
    return train(graph, config, out_dir=out_dir)


def sweep_neighborhood_size(graph: Graph, base_config: TrainConfig, k_values,
                            seeds=None, out_root: str | None = None) -> list[RunResult]:
    """One run per (K, seed), the same seed set shared across all K values."""
    k_values = [int(k) for k in k_values]
    if any(k < 1 for k in k_values):
        raise ConfigError(f"all K values must be >= 1, got {k_values}")
    seeds = [base_config.seed] if seeds is None else list(seeds)
    results = []
    for k in k_values:
        for seed in seeds:
            out_dir = None
            if out_root is not None:
                out_dir = os.path.join(out_root, f"K_{k}_seed_{seed}")
            cfg = replace(base_config, neighborhood_size=k, seed=seed)
            results.append(train(graph, cfg, out_dir=out_dir))
    return results


def run_seeds(graph: Graph, config: TrainConfig, seeds, out_root: str | None = None) -> list[RunResult]:
    results = []
    for seed in seeds:
        out_dir = os.path.join(out_root, f"seed_{seed}") if out_root is not None else None
        results.append(train(graph, replace(config, seed=seed), out_dir=out_dir))
    return results


def summarize_metrics(results) -> dict:
    """Mean/std of ACC/NMI/ARI over the runs that produced metrics."""
    scored = [r.metrics for r in results if r.metrics is not None]
    summary: dict = {"num_runs": len(results), "num_scored": len(scored)}
    for key in ("acc", "nmi", "ari"):
        values = np.asarray([getattr(m, key) for m in scored], dtype=np.float64)
        if values.size:
            summary[f"{key}_mean"] = float(values.mean())
            summary[f"{key}_std"] = float(values.std())
            summary[key] = [float(v) for v in values]
    return summary


def write_history_csv(history, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(LossBreakdown.CSV_HEADER + "\n")
        for epoch, row in enumerate(history):
            fh.write(row.csv_row(epoch) + "\n")


def _write_run_json(path: str, metrics: MetricReport | None, wall_seconds: float,
                    config: TrainConfig, graph_name: str, notes: list[str]) -> None:
    payload = {
        "dataset": graph_name,
        "metrics": metrics.as_dict() if metrics is not None else None,
        "wall_seconds": wall_seconds,
        "config": config.as_dict(),
        "notes": notes,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` config file; '#' starts a comment.

    Values: ints, floats, true/false, comma lists (for hidden_dims), or
    bare strings.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    overrides: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            overrides[key] = _parse_config_value(value)
    return overrides


def _parse_config_value(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if "," in text:
        return tuple(_parse_config_value(part.strip()) for part in text.split(","))
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text
