"""From learned coefficients to cluster labels: affinity construction,
normalized-Laplacian spectral clustering, and the attribute/structure-only
baselines (k-means, spectral on the raw adjacency).

The affinity pipeline follows the usual deep-subspace-clustering
post-processing: zero the diagonal, keep each column's largest coefficients
up to an energy fraction, symmetrize absolute values, and optionally smooth
with a low-rank reconstruction. Datasets stay below a few thousand nodes,
so dense eigendecompositions are acceptable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import ConfigError, NumericalError


@dataclass(frozen=True)
class ClusterAssignment:
    """Integer labels in [0, num_clusters); at most num_clusters distinct values."""

    labels: np.ndarray
    num_clusters: int

    def __post_init__(self):
        y = self.labels
        if y.ndim != 1:
            raise ValueError(f"labels must be 1-D, got shape {y.shape}")
        if y.size and (y.min() < 0 or y.max() >= self.num_clusters):
            raise ValueError(f"labels must lie in [0, {self.num_clusters})")


def threshold_columns_by_energy(c: np.ndarray, energy_fraction: float) -> np.ndarray:
    """Keep, per column, the largest-magnitude entries whose squared sum reaches
    ``energy_fraction`` of that column's total energy; zero the rest."""
    if not 0.0 < energy_fraction <= 1.0:
        raise ConfigError(f"energy_fraction must be in (0, 1], got {energy_fraction}")
    if energy_fraction == 1.0:
        return np.array(c, copy=True)
    c = np.asarray(c, dtype=np.float64)
    squares = c * c
    order = np.argsort(-np.abs(c), axis=0, kind="stable")
    sorted_sq = np.take_along_axis(squares, order, axis=0)
    cums = np.cumsum(sorted_sq, axis=0)
    totals = cums[-1, :]
    keep_counts = np.argmax(cums >= energy_fraction * totals[None, :], axis=0) + 1
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(c.shape[0])[:, None], axis=0)
    mask = ranks < keep_counts[None, :]
    return np.where(mask, c, 0.0)


def _lowrank_smooth(affinity: np.ndarray, rank: int) -> np.ndarray:
    n = affinity.shape[0]
    r = min(rank, n)
    try:
        if r < n - 1 and n > 512:
            u, s, _ = scipy.sparse.linalg.svds(affinity, k=r, v0=np.ones(n))
            order = np.argsort(-s)
            u, s = u[:, order], s[order]
        else:
            u, s, _ = np.linalg.svd(affinity)
            u, s = u[:, :r], s[:r]
    except (np.linalg.LinAlgError, scipy.sparse.linalg.ArpackError) as exc:
        raise NumericalError(f"singular value decomposition failed: {exc}",
                             component="affinity") from exc
    u = u * np.sqrt(s)[None, :]
    norms = np.linalg.norm(u, axis=1)
    norms[norms == 0] = 1.0
    u = u / norms[:, None]
    gram = u @ u.T
    gram = np.clip(gram, 0.0, None)
    peak = gram.max()
    if peak > 0:
        gram = gram / peak
    return 0.5 * (gram + gram.T)


def build_affinity(coefficients: np.ndarray, num_clusters: int | None = None,
                   energy_fraction: float = 1.0, rank_multiplier: int = 4,
                   smoothing: bool = True) -> np.ndarray:
    """Turn a coefficient matrix into a symmetric nonnegative affinity.

    Pipeline: zero the diagonal, threshold columns by energy, symmetrize as
    (|C'| + |C'|^T)/2, then (when ``smoothing``) rebuild from the top
    ``rank_multiplier * num_clusters + 1`` singular vectors.
    """
    c = np.asarray(coefficients, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"coefficients must be square, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise NumericalError("coefficients contain NaN or Inf", component="affinity")
    c = np.array(c, copy=True)
    np.fill_diagonal(c, 0.0)
    if not c.any():
        raise NumericalError("degenerate coefficients: all off-diagonal entries are zero",
                             component="affinity")
    c = threshold_columns_by_energy(c, energy_fraction)
    affinity = 0.5 * (np.abs(c) + np.abs(c.T))
    if smoothing:
        if num_clusters is None:
            raise ConfigError("smoothing needs num_clusters to pick the rank")
        if rank_multiplier < 1:
            raise ConfigError(f"rank_multiplier must be >= 1, got {rank_multiplier}")
        affinity = _lowrank_smooth(affinity, rank_multiplier * num_clusters + 1)
    return affinity


def _validate_affinity(affinity: np.ndarray) -> np.ndarray:
    a = np.asarray(affinity, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"affinity must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("affinity must be symmetric")
    if a.min() < -1e-12:
        raise ValueError("affinity must be entrywise nonnegative")
    return np.clip(0.5 * (a + a.T), 0.0, None)


def spectral_clustering(affinity: np.ndarray, k: int, seed: int = 0,
                        restarts: int = 10) -> ClusterAssignment:
    """Normalized-cut style spectral clustering.

    Embeds nodes with the k smallest eigenvectors of the symmetric
    normalized Laplacian (zero-degree nodes get degree 1 substituted), row
    normalizes, and runs seeded k-means on the embedding.
    """
    a = _validate_affinity(affinity)
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"cluster count k={k} must lie in [1, {n}]")
    degrees = a.sum(axis=1)
    degrees[degrees == 0] = 1.0
    inv_sqrt = 1.0 / np.sqrt(degrees)
    laplacian = np.eye(n) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
    laplacian = 0.5 * (laplacian + laplacian.T)
    try:
        _, vectors = scipy.linalg.eigh(laplacian, subset_by_index=[0, k - 1])
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}",
                             component="spectral") from exc
    row_norms = np.linalg.norm(vectors, axis=1)
    row_norms[row_norms == 0] = 1.0
    embedding = vectors / row_norms[:, None]
    return kmeans(embedding, k, seed=seed, restarts=restarts)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    closest = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[i] = points[idx]
        closest = np.minimum(closest, ((points - centroids[i]) ** 2).sum(axis=1))
    return centroids


def _sq_distances(points: np.ndarray, centroids: np.ndarray,
                  point_sq: np.ndarray) -> np.ndarray:
    d2 = (point_sq[:, None] - 2.0 * (points @ centroids.T)
          + (centroids * centroids).sum(axis=1)[None, :])
    return np.maximum(d2, 0.0)


def _lloyd(points: np.ndarray, centroids: np.ndarray, max_iter: int) -> tuple[np.ndarray, float]:
    n, k = points.shape[0], centroids.shape[0]
    point_sq = (points * points).sum(axis=1)
    prev_labels = None
    labels = np.zeros(n, dtype=np.int64)
    inertia = np.inf
    for _ in range(max_iter):
        d2 = _sq_distances(points, centroids, point_sq)
        labels = d2.argmin(axis=1)
        contrib = d2[np.arange(n), labels]
        inertia = float(contrib.sum())
        if inertia <= 0.0:
            break
        counts = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            # Re-seed each empty centroid from the point currently farthest
            # from its assigned centroid, then re-assign.
            pool = contrib.copy()
            for c in empties:
                far = int(np.argmax(pool))
                centroids[c] = points[far]
                pool[far] = -1.0
            prev_labels = None
            continue
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        prev_labels = labels
        for c in range(k):
            centroids[c] = points[labels == c].mean(axis=0)
    return labels, inertia


def kmeans(points: np.ndarray, k: int, seed: int = 0, restarts: int = 10,
           max_iter: int = 300) -> ClusterAssignment:
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` by
    within-cluster sum of squares. Deterministic for a fixed seed."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.size == 0:
        raise ConfigError(f"points must be a nonempty (N, m) matrix, got shape {points.shape}")
    if not np.isfinite(points).all():
        raise NumericalError("points contain NaN or Inf", component="kmeans")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"cluster count k={k} must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(max(restarts, 1)):
        centroids = _kmeans_pp_init(points, k, rng)
        labels, inertia = _lloyd(points, centroids, max_iter)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
        if best_inertia <= 0.0:
            break
    return ClusterAssignment(labels=best_labels, num_clusters=k)


def spectral_baseline(adjacency: np.ndarray, k: int, seed: int = 0,
                      restarts: int = 10) -> ClusterAssignment:
    """Spectral clustering with the raw adjacency as the similarity matrix."""
    return spectral_clustering(np.asarray(adjacency, dtype=np.float64), k,
                               seed=seed, restarts=restarts)


def cluster_from_coefficients(coefficients: np.ndarray, num_clusters: int, *,
                              energy_fraction: float = 1.0, rank_multiplier: int = 4,
                              smoothing: bool = True, seed: int = 0,
                              restarts: int = 10) -> tuple[ClusterAssignment, np.ndarray]:
    """Full path from a learned coefficient matrix to labels; returns the
    assignment together with the affinity it used."""
    affinity = build_affinity(coefficients, num_clusters=num_clusters,
                              energy_fraction=energy_fraction,
                              rank_multiplier=rank_multiplier, smoothing=smoothing)
    assignment = spectral_clustering(affinity, num_clusters, seed=seed, restarts=restarts)
    return assignment, affinity
