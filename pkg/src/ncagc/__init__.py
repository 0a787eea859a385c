"""Attributed graph clustering with neighborhood contrast and contrastive
self-expression: a symmetric graph-attention autoencoder learns node
representations while a trainable coefficient matrix reconstructs each node
from the others; spectral clustering of the induced affinity yields labels.
"""

from .clustering import (ClusterAssignment, build_affinity, cluster_from_coefficients,
                         kmeans, spectral_baseline, spectral_clustering)
from .errors import ConfigError, DataError, NcagcError, NumericalError
from .graph_io import (Graph, add_self_loops, load_dataset, make_toy_graph,
                       normalize_attributes, save_archive)
from .knn import PositiveMask, knn_positive_mask
from .losses import (LossBreakdown, contrastive_self_expression_loss, cosine_similarity,
                     neighborhood_contrast_loss, plain_self_expression_loss,
                     reconstruction_loss, total_loss)
from .metrics import MetricReport, ari, clustering_accuracy, evaluate_labels, nmi
from .model import GraphAttentionLayer, GraphAutoencoder, MeanAggregationLayer
from .self_expression import (SelfExpressionLayer, coef_regularizer, init_self_expression,
                              self_express)
from .trainer import (RunResult, TrainConfig, evaluate, preset_config, run_ablation,
                      run_seeds, summarize_metrics, sweep_neighborhood_size, train)

__version__ = "0.1.0"

__all__ = [
    "ClusterAssignment", "ConfigError", "DataError", "Graph", "GraphAttentionLayer",
    "GraphAutoencoder", "LossBreakdown", "MeanAggregationLayer", "MetricReport",
    "NcagcError", "NumericalError", "PositiveMask", "RunResult", "SelfExpressionLayer",
    "TrainConfig", "add_self_loops", "ari", "build_affinity", "clustering_accuracy",
    "cluster_from_coefficients", "coef_regularizer", "contrastive_self_expression_loss",
    "cosine_similarity", "evaluate", "evaluate_labels", "init_self_expression", "kmeans",
    "knn_positive_mask", "load_dataset", "make_toy_graph", "neighborhood_contrast_loss",
    "nmi", "normalize_attributes", "plain_self_expression_loss", "preset_config",
    "reconstruction_loss", "run_ablation", "run_seeds", "save_archive", "self_express",
    "spectral_baseline", "spectral_clustering", "summarize_metrics",
    "sweep_neighborhood_size", "total_loss", "train",
]
