"""Per-node selection of the top-K most cosine-similar nodes as contrastive positives.

The datasets are small enough for exact O(N^2) search, so no approximate
index is used. Selection is deterministic: ties are broken toward the lower
node index, and zero-norm rows are defined to have similarity 0 to everything
(they then pick up the K lowest-index other nodes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PositiveMask:
    """Boolean N x N mask; mask[i, j] marks j as one of i's K positives."""

    mask: np.ndarray
    K: int

    def __post_init__(self):
        m = self.mask
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.dtype != np.bool_:
            raise ValueError(f"mask must be a square boolean matrix, got {m.dtype} {m.shape}")
        if np.diag(m).any():
            raise ValueError("a node must never be its own positive")
        expected = min(self.K, m.shape[0] - 1)
        row_sums = m.sum(axis=1)
        if not (row_sums == expected).all():
            raise ValueError(f"every row must have exactly {expected} positives")

    @property
    def num_nodes(self) -> int:
        return self.mask.shape[0]


def cosine_similarity_rows(x: np.ndarray) -> np.ndarray:
    """All-pairs cosine similarity between the rows of ``x``; zero-norm rows get 0."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = x / safe[:, None]
    return unit @ unit.T


def knn_positive_mask(representations: np.ndarray, K: int) -> PositiveMask:
    """Mark, for every node, the K most cosine-similar other nodes as positives."""
    if K <= 0:
        raise ConfigError(f"neighborhood size K must be positive, got {K}")
    x = np.asarray(representations, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ConfigError(f"need an (N, d) matrix with N >= 2, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("representations contain NaN or Inf")
    n = x.shape[0]
    sims = cosine_similarity_rows(x)
    np.fill_diagonal(sims, -np.inf)
    # Stable sort on the negated similarities: equal scores keep ascending
    # index order, which is the tie-breaking rule.
    order = np.argsort(-sims, axis=1, kind="stable")
    keep = min(K, n - 1)
    mask = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), keep)
    mask[rows, order[:, :keep].ravel()] = True
    return PositiveMask(mask=mask, K=K)
