"""Loading, validation, and preprocessing of attributed-graph datasets.

The canonical in-memory form is :class:`Graph`, with node-major attributes
(one row per node). Two on-disk formats are supported:

* ``edge-list``: a plain-text edge file (two whitespace-separated node ids
  per line) plus a feature table (node id, ``d`` numeric values, trailing
  class-label string per line).
* ``archive``: a single ``.npz`` container with the attribute matrix
  (dense or CSR), a COO edge index, an optional label vector, and metadata.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError

logger = logging.getLogger("ncagc")

# Expected (nodes, features, classes) for the bundled benchmark names; used to
# cross-check loaded files against the published dataset statistics.
DATASET_STATS = {
    "cora": (2708, 1433, 7),
    "citeseer": (3327, 3703, 6),
    "wiki": (2405, 4973, 17),
    "acm": (3025, 1870, 3),
}

NORMALIZATION_MODES = ("none", "row-l1", "row-l2")


@dataclass(frozen=True)
class Graph:
    """An attributed graph with optional ground-truth cluster labels.

    attributes: (N, d) float matrix, one row per node.
    adjacency:  (N, N) symmetric binary matrix.
    labels:     optional (N,) integer vector with values in [0, num_clusters).
    """

    attributes: np.ndarray
    adjacency: np.ndarray
    labels: np.ndarray | None
    num_clusters: int
    name: str = "unnamed"

    def __post_init__(self):
        validate_graph(self)

    @property
    def num_nodes(self) -> int:
        return self.attributes.shape[0]

    @property
    def num_features(self) -> int:
        return self.attributes.shape[1]

    @property
    def num_edges(self) -> int:
        """Number of undirected edges (self-loops counted once)."""
        off_diag = int(np.count_nonzero(self.adjacency)) - int(np.count_nonzero(np.diag(self.adjacency)))
        return off_diag // 2 + int(np.count_nonzero(np.diag(self.adjacency)))


def validate_graph(graph: Graph) -> None:
    x, a = graph.attributes, graph.adjacency
    if x.ndim != 2:
        raise DataError(f"attributes must be 2-D, got shape {x.shape}")
    n = x.shape[0]
    if a.shape != (n, n):
        raise DataError(f"adjacency shape {a.shape} does not match {n} nodes")
    if not np.isfinite(x).all():
        raise DataError("attributes contain NaN or Inf")
    if not np.array_equal(a, a.T):
        raise DataError("adjacency is not symmetric")
    vals = np.unique(a)
    if not np.isin(vals, (0, 1)).all():
        raise DataError(f"adjacency entries must be 0/1, found {vals[:5]}")
    if graph.num_clusters < 2:
        raise DataError(f"num_clusters must be >= 2, got {graph.num_clusters}")
    if n < graph.num_clusters:
        raise DataError(f"{n} nodes is fewer than {graph.num_clusters} clusters")
    if graph.labels is not None:
        y = graph.labels
        if y.shape != (n,):
            raise DataError(f"labels shape {y.shape} does not match {n} nodes")
        if y.min() < 0 or y.max() >= graph.num_clusters:
            raise DataError(
                f"label ids must lie in [0, {graph.num_clusters}), "
                f"found range [{y.min()}, {y.max()}]"
            )


def load_dataset(path: str, format: str = "auto", name: str | None = None,
                 num_clusters: int | None = None) -> Graph:
    """Load a dataset from disk into a validated :class:`Graph`.

    ``format`` is one of ``edge-list``, ``archive``, or ``auto`` (decide from
    the file extension). For the edge-list format ``path`` may be either the
    feature-table file or a directory containing exactly one ``*.content`` /
    ``*.cites`` pair.
    """
    if not os.path.exists(path):
        raise DataError(f"dataset path does not exist: {path}")
    if format == "auto":
        format = "archive" if str(path).endswith(".npz") else "edge-list"
    if format == "archive":
        graph = load_archive(path)
    elif format == "edge-list":
        content_path, cites_path = _resolve_edge_list_paths(path)
        inferred = name or os.path.splitext(os.path.basename(content_path))[0]
        graph = load_edge_list_dataset(content_path, cites_path, name=inferred,
                                       num_clusters=num_clusters)
    else:
        raise ConfigError(f"unknown dataset format: {format!r}")
    _check_known_stats(graph)
    return graph


def _resolve_edge_list_paths(path: str) -> tuple[str, str]:
    if os.path.isdir(path):
        contents = sorted(f for f in os.listdir(path) if f.endswith(".content"))
        cites = sorted(f for f in os.listdir(path) if f.endswith(".cites"))
        if len(contents) != 1 or len(cites) != 1:
            raise DataError(
                f"{path} must contain exactly one .content and one .cites file, "
                f"found {len(contents)} / {len(cites)}"
            )
        return os.path.join(path, contents[0]), os.path.join(path, cites[0])
    base, _ = os.path.splitext(path)
    content_path, cites_path = base + ".content", base + ".cites"
    for p in (content_path, cites_path):
        if not os.path.exists(p):
            raise DataError(f"expected companion file missing: {p}")
    return content_path, cites_path


def load_edge_list_dataset(content_path: str, cites_path: str, name: str,
                           num_clusters: int | None = None) -> Graph:
    """Parse a feature-table + edge-list dataset pair.

    Node order follows the feature table. A directed edge file is
    symmetrized with a logged warning; unknown node ids in the edge file are
    a validation error.
    """
    ids: list[str] = []
    rows: list[np.ndarray] = []
    label_strings: list[str] = []
    with open(content_path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise DataError(f"{content_path}:{lineno}: expected id, features, label")
            ids.append(parts[0])
            label_strings.append(parts[-1])
            try:
                rows.append(np.asarray(parts[1:-1], dtype=np.float32))
            except ValueError as exc:
                raise DataError(f"{content_path}:{lineno}: non-numeric feature") from exc
    if not rows:
        raise DataError(f"{content_path} contains no nodes")
    widths = {r.shape[0] for r in rows}
    if len(widths) != 1:
        raise DataError(f"{content_path}: inconsistent feature counts {sorted(widths)}")
    attributes = np.vstack(rows)
    n = attributes.shape[0]

    index = {node_id: i for i, node_id in enumerate(ids)}
    if len(index) != n:
        raise DataError(f"{content_path}: duplicate node ids")

    directed: set[tuple[int, int]] = set()
    with open(cites_path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise DataError(f"{cites_path}:{lineno}: expected two node ids")
            try:
                u, v = index[parts[0]], index[parts[1]]
            except KeyError as exc:
                raise DataError(f"{cites_path}:{lineno}: unknown node id {exc.args[0]!r}") from exc
            directed.add((u, v))
    one_way = sum(1 for (u, v) in directed if u != v and (v, u) not in directed)
    if one_way:
        logger.warning("%s: symmetrized %d one-way edge(s) on load", cites_path, one_way)
    adjacency = np.zeros((n, n), dtype=np.int8)
    for u, v in directed:
        adjacency[u, v] = 1
        adjacency[v, u] = 1

    classes = sorted(set(label_strings))
    label_index = {c: i for i, c in enumerate(classes)}
    labels = np.asarray([label_index[s] for s in label_strings], dtype=np.int64)
    k = num_clusters if num_clusters is not None else len(classes)
    if labels.max() >= k:
        raise DataError(f"found {len(classes)} classes but num_clusters={k}")
    return Graph(attributes=attributes, adjacency=adjacency, labels=labels,
                 num_clusters=k, name=name)


def _check_known_stats(graph: Graph) -> None:
    expected = DATASET_STATS.get(graph.name.lower())
    if expected is None:
        return
    actual = (graph.num_nodes, graph.num_features, graph.num_clusters)
    if actual != expected:
        raise DataError(
            f"{graph.name}: loaded (nodes, features, classes)={actual} "
            f"but the dataset statistics say {expected}"
        )


def save_archive(graph: Graph, path: str) -> None:
    """Write a Graph to the single-file ``.npz`` archive format.

    The attribute matrix is stored sparse (CSR) when its density is below
    25%, dense otherwise; edges are stored as a COO index of the nonzero
    upper triangle (diagonal included).
    """
    iu, ju = np.nonzero(np.triu(graph.adjacency))
    payload: dict[str, np.ndarray] = {
        "edge_index": np.stack([iu, ju]).astype(np.int64),
        "num_clusters": np.asarray(graph.num_clusters, dtype=np.int64),
        "name": np.asarray(graph.name),
        "num_nodes": np.asarray(graph.num_nodes, dtype=np.int64),
    }
    x = graph.attributes
    density = np.count_nonzero(x) / max(x.size, 1)
    if density < 0.25:
        csr = sp.csr_matrix(x)
        payload.update(
            attr_data=csr.data, attr_indices=csr.indices,
            attr_indptr=csr.indptr, attr_shape=np.asarray(csr.shape),
        )
    else:
        payload["attributes"] = x
    if graph.labels is not None:
        payload["labels"] = graph.labels
    np.savez_compressed(path, **payload)


def load_archive(path: str) -> Graph:
    try:
        with np.load(path, allow_pickle=False) as data:
            payload = {k: data[k] for k in data.files}
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read archive {path}: {exc}") from exc
    for key in ("edge_index", "num_clusters", "num_nodes", "name"):
        if key not in payload:
            raise DataError(f"archive {path} is missing key {key!r}")
    n = int(payload["num_nodes"])
    if "attributes" in payload:
        attributes = payload["attributes"]
    elif "attr_data" in payload:
        attributes = sp.csr_matrix(
            (payload["attr_data"], payload["attr_indices"], payload["attr_indptr"]),
            shape=tuple(payload["attr_shape"]),
        ).toarray()
    else:
        raise DataError(f"archive {path} holds no attribute matrix")
    edge_index = payload["edge_index"]
    adjacency = np.zeros((n, n), dtype=np.int8)
    adjacency[edge_index[0], edge_index[1]] = 1
    adjacency[edge_index[1], edge_index[0]] = 1
    labels = payload.get("labels")
    if labels is not None:
        labels = labels.astype(np.int64)
    return Graph(
        attributes=attributes.astype(np.float32),
        adjacency=adjacency,
        labels=labels,
        num_clusters=int(payload["num_clusters"]),
        name=str(payload["name"]),
    )


def normalize_attributes(graph: Graph, mode: str) -> Graph:
    """Return a copy of ``graph`` with row-normalized attributes.

    ``row-l1`` scales each nonzero row to sum 1, ``row-l2`` to unit Euclidean
    norm; all-zero rows pass through unchanged. ``none`` is the identity.
    """
    if mode not in NORMALIZATION_MODES:
        raise ConfigError(f"normalization mode must be one of {NORMALIZATION_MODES}, got {mode!r}")
    if mode == "none":
        return graph
    x = graph.attributes.astype(np.float64)
    if mode == "row-l1":
        scale = np.abs(x).sum(axis=1)
    else:
        scale = np.linalg.norm(x, axis=1)
    scale[scale == 0] = 1.0
    normalized = (x / scale[:, None]).astype(np.float32)
    return replace(graph, attributes=normalized)


def add_self_loops(adjacency: np.ndarray) -> np.ndarray:
    """Return the adjacency with its diagonal forced to 1, off-diagonal unchanged."""
    out = np.array(adjacency, copy=True)
    np.fill_diagonal(out, 1)
    return out


def make_toy_graph(num_nodes: int = 30, num_clusters: int = 3, num_features: int = 8,
                   seed: int = 0, p_in: float = 0.7, p_out: float = 0.05,
                   center_scale: float = 4.0, name: str = "toy") -> Graph:
    """Deterministic synthetic attributed graph with planted clusters.

    Nodes are split into near-equal groups; attributes are Gaussian blobs
    around per-cluster centers and edges follow a planted-partition model
    (denser within groups than across).
    """
    if num_nodes < num_clusters:
        raise ConfigError("toy graph needs at least one node per cluster")
    rng = np.random.default_rng(seed)
    labels = np.sort(np.arange(num_nodes) % num_clusters).astype(np.int64)
    centers = rng.normal(scale=center_scale, size=(num_clusters, num_features))
    attributes = centers[labels] + rng.normal(size=(num_nodes, num_features))
    same = labels[:, None] == labels[None, :]
    probs = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((num_nodes, num_nodes)) < probs, k=1)
    adjacency = (upper | upper.T).astype(np.int8)
    return Graph(attributes=attributes.astype(np.float32), adjacency=adjacency,
                 labels=labels, num_clusters=num_clusters, name=name)
