"""Symmetric graph autoencoder: an L-layer attention encoder producing node
representations and a mirrored decoder reconstructing node attributes.

Layers come in two flavors behind the same forward interface: softmax
attention over the neighborhood (default) and plain mean aggregation (the
attention-free variant used by ablations). Both require every node to carry
a self-loop so that its own features always participate.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, NumericalError

ACTIVATIONS = ("prelu", "elu", "linear")
GNN_KINDS = ("attention", "mean-aggregation")

# Negative slope of the LeakyReLU inside the attention scoring function.
ATTENTION_SLOPE = 0.2


def _make_activation(name: str) -> nn.Module:
    if name == "prelu":
        return nn.PReLU()
    if name == "elu":
        return nn.ELU()
    if name == "linear":
        return nn.Identity()
    raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {name!r}")


def as_adjacency_tensor(adjacency, dtype=torch.float32) -> torch.Tensor:
    """Convert an adjacency (numpy or tensor) to a dense float tensor."""
    if isinstance(adjacency, torch.Tensor):
        return adjacency.to(dtype)
    return torch.as_tensor(np.asarray(adjacency), dtype=dtype)


def _check_self_loops(adjacency: torch.Tensor) -> None:
    if not bool((adjacency.diagonal() > 0).all()):
        raise ValueError("adjacency must carry self-loops (every diagonal entry 1)")


class GraphAttentionLayer(nn.Module):
    """Single-head graph attention: out_i = act(sum_j alpha_ij * W h_j).

    alpha is a softmax over i's neighborhood of LeakyReLU-scored pairs, so
    the coefficients of each node are nonnegative and sum to one.
    """

    def __init__(self, in_dim: int, out_dim: int, activation: str = "prelu"):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = nn.Parameter(torch.empty(in_dim, out_dim))
        self.attention = nn.Parameter(torch.empty(2 * out_dim))
        self.activation = _make_activation(activation)
        self.reset_parameters()

    def reset_parameters(self):
        nn.init.xavier_uniform_(self.weight)
        bound = math.sqrt(6.0 / (2 * self.out_dim + 1))
        nn.init.uniform_(self.attention, -bound, bound)

    def forward(self, h: torch.Tensor, adjacency: torch.Tensor,
                return_attention: bool = False):
        wh = h @ self.weight
        src = wh @ self.attention[: self.out_dim]
        dst = wh @ self.attention[self.out_dim:]
        scores = torch.nn.functional.leaky_relu(
            src.unsqueeze(1) + dst.unsqueeze(0), negative_slope=ATTENTION_SLOPE
        )
        scores = scores.masked_fill(adjacency <= 0, float("-inf"))
        alpha = torch.softmax(scores, dim=1)
        out = self.activation(alpha @ wh)
        if return_attention:
            return out, alpha
        return out


class MeanAggregationLayer(nn.Module):
    """Attention-free variant: out_i = act(mean over N(i) of W h_j)."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "prelu"):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = nn.Parameter(torch.empty(in_dim, out_dim))
        self.activation = _make_activation(activation)
        self.reset_parameters()

    def reset_parameters(self):
        nn.init.xavier_uniform_(self.weight)

    def forward(self, h: torch.Tensor, adjacency: torch.Tensor) -> torch.Tensor:
        adj = (adjacency > 0).to(h.dtype)
        degree = adj.sum(dim=1, keepdim=True)
        return self.activation((adj @ (h @ self.weight)) / degree)


def _build_layer(kind: str, in_dim: int, out_dim: int, activation: str) -> nn.Module:
    if kind == "attention":
        return GraphAttentionLayer(in_dim, out_dim, activation)
    if kind == "mean-aggregation":
        return MeanAggregationLayer(in_dim, out_dim, activation)
    raise ConfigError(f"gnn_kind must be one of {GNN_KINDS}, got {kind!r}")


class GraphAutoencoder(nn.Module):
    """Encoder dims chain d -> hidden[0] -> ... -> hidden[-1]; decoder mirrors it.

    Encoder and decoder weights are independent; "symmetric" refers to the
    mirrored architecture. Both passes reuse the same adjacency at every layer.
    """

    def __init__(self, feature_dim: int, hidden_dims, gnn_kind: str = "attention",
                 activation: str = "prelu"):
        super().__init__()
        hidden_dims = list(hidden_dims)
        if feature_dim < 1 or any(d < 1 for d in hidden_dims) or not hidden_dims:
            raise ConfigError(f"invalid dimension chain: {feature_dim} -> {hidden_dims}")
        dims = [feature_dim] + hidden_dims
        self.feature_dim = feature_dim
        self.hidden_dims = tuple(hidden_dims)
        self.gnn_kind = gnn_kind
        self.encoder = nn.ModuleList(
            _build_layer(gnn_kind, dims[i], dims[i + 1], activation) for i in range(len(hidden_dims))
        )
        rev = dims[::-1]
        self.decoder = nn.ModuleList(
            _build_layer(gnn_kind, rev[i], rev[i + 1], activation) for i in range(len(hidden_dims))
        )

    @property
    def latent_dim(self) -> int:
        return self.hidden_dims[-1]

    def _run(self, layers, h, adjacency, stage):
        for i, layer in enumerate(layers):
            h = layer(h, adjacency)
            if not bool(torch.isfinite(h).all()):
                raise NumericalError("non-finite activations", component=stage, layer=i)
        return h

    def encode(self, x: torch.Tensor, adjacency: torch.Tensor) -> torch.Tensor:
        """Map node attributes to latent representations (one row per node)."""
        _check_self_loops(adjacency)
        if x.shape[1] != self.feature_dim:
            raise ConfigError(f"expected {self.feature_dim} input features, got {x.shape[1]}")
        return self._run(self.encoder, x, adjacency, "encoder")

    def decode(self, z_hat: torch.Tensor, adjacency: torch.Tensor) -> torch.Tensor:
        """Map (self-expressed) latent representations back to attribute space."""
        _check_self_loops(adjacency)
        if z_hat.shape[1] != self.latent_dim:
            raise ConfigError(f"expected {self.latent_dim} latent features, got {z_hat.shape[1]}")
        return self._run(self.decoder, z_hat, adjacency, "decoder")
