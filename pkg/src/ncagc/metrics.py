"""Clustering evaluation: accuracy under optimal label matching, NMI, ARI.

All three metrics are invariant to relabeling of either argument. Accuracy
solves the label-matching problem exactly with an assignment solver on the
contingency matrix, never greedily.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class MetricReport:
    acc: float
    nmi: float
    ari: float
    n: int

    def as_dict(self) -> dict:
        return {"acc": self.acc, "nmi": self.nmi, "ari": self.ari, "n": self.n}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def __str__(self) -> str:
        return f"ACC={self.acc:.4f} NMI={self.nmi:.4f} ARI={self.ari:.4f} (n={self.n})"


def _as_label_arrays(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(getattr(pred, "labels", pred), dtype=np.int64).ravel()
    truth = np.asarray(getattr(truth, "labels", truth), dtype=np.int64).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"label vectors differ in length: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("empty label vectors")
    return pred, truth


def contingency_matrix(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Counts n[i, j] = |{samples with pred id i and truth id j}| over compacted ids."""
    pred, truth = _as_label_arrays(pred, truth)
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def clustering_accuracy(pred, truth) -> float:
    """Fraction of samples correctly clustered under the best label bijection."""
    pred, truth = _as_label_arrays(pred, truth)
    table = contingency_matrix(pred, truth)
    r, c = table.shape
    size = max(r, c)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[:r, :c] = table
    rows, cols = linear_sum_assignment(-padded)
    return float(padded[rows, cols].sum()) / pred.size


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth, average: str = "arithmetic") -> float:
    """Mutual information normalized by the mean of the two label entropies.

    ``average`` selects the normalizer: ``arithmetic`` (default) or
    ``geometric``. Returns 1.0 when both partitions are single-cluster
    (identical by construction) and 0.0 when exactly one has zero entropy.
    """
    if average not in ("arithmetic", "geometric"):
        raise ValueError(f"average must be 'arithmetic' or 'geometric', got {average!r}")
    pred, truth = _as_label_arrays(pred, truth)
    n = pred.size
    table = contingency_matrix(pred, truth).astype(np.float64)
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    h_pred = _entropy(a, n)
    h_truth = _entropy(b, n)
    if h_pred == 0.0 and h_truth == 0.0:
        return 1.0
    if h_pred == 0.0 or h_truth == 0.0:
        return 0.0
    nonzero_per_row = (table > 0).sum(axis=1)
    nonzero_per_col = (table > 0).sum(axis=0)
    if (nonzero_per_row == 1).all() and (nonzero_per_col == 1).all():
        return 1.0  # identical up to renaming; avoid rounding below 1
    nz = table > 0
    outer = np.outer(a, b)
    mi = float((table[nz] / n * (np.log(table[nz] * n) - np.log(outer[nz]))).sum())
    mi = max(mi, 0.0)
    if average == "arithmetic":
        norm = 0.5 * (h_pred + h_truth)
    else:
        norm = float(np.sqrt(h_pred * h_truth))
    return min(mi / norm, 1.0)


def ari(pred, truth) -> float:
    """Adjusted Rand index via the pair-counting contingency formula."""
    pred, truth = _as_label_arrays(pred, truth)
    n = pred.size
    table = contingency_matrix(pred, truth).astype(np.float64)
    a = table.sum(axis=1)
    b = table.sum(axis=0)

    def comb2(x):
        return (x * (x - 1) / 2).sum()

    sum_cells = comb2(table)
    sum_a, sum_b = comb2(a), comb2(b)
    total = n * (n - 1) / 2
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # Degenerate partitions (e.g. all singletons on both sides) carry no
        # chance-corrected signal; identical-by-construction counts as 1.
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def evaluate_labels(pred, truth, nmi_average: str = "arithmetic") -> MetricReport:
    pred_arr, truth_arr = _as_label_arrays(pred, truth)
    return MetricReport(
        acc=clustering_accuracy(pred_arr, truth_arr),
        nmi=nmi(pred_arr, truth_arr, average=nmi_average),
        ari=ari(pred_arr, truth_arr),
        n=int(pred_arr.size),
    )
