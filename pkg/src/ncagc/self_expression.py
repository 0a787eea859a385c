"""Trainable self-expression layer: reconstructs each node's representation
as a linear combination of all *other* nodes' representations.

The coefficient matrix is dense and trained jointly with the network. Its
diagonal is masked to zero in the forward pass (rather than projected after
optimizer steps), so gradients to the diagonal are identically zero and the
exclusion of each node from its own combination holds exactly.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .errors import ConfigError

# Every coefficient starts at this constant.
INITIAL_COEFFICIENT = 1e-4


def init_self_expression(num_nodes: int) -> np.ndarray:
    """Fresh coefficient matrix, every entry 1e-4."""
    if num_nodes < 2:
        raise ConfigError(f"self-expression needs at least 2 nodes, got {num_nodes}")
    return np.full((num_nodes, num_nodes), INITIAL_COEFFICIENT, dtype=np.float64)


def _off_diagonal(c: torch.Tensor) -> torch.Tensor:
    eye = torch.eye(c.shape[0], dtype=c.dtype, device=c.device)
    return c * (1.0 - eye)


def self_express(z: torch.Tensor, coefficients: torch.Tensor) -> torch.Tensor:
    """z_hat[i] = sum_{j != i} coefficients[i, j] * z[j].

    The diagonal of ``coefficients`` is ignored, so the output is invariant
    to any change of the diagonal entries.
    """
    if coefficients.shape != (z.shape[0], z.shape[0]):
        raise ValueError(
            f"coefficients must be ({z.shape[0]}, {z.shape[0]}), got {tuple(coefficients.shape)}"
        )
    return _off_diagonal(coefficients) @ z


def coef_regularizer(coefficients: torch.Tensor, squared: bool = True) -> torch.Tensor:
    """Frobenius penalty on the diagonal-zeroed coefficients.

    ``squared=True`` (default) returns the sum of squared off-diagonal
    entries, whose gradient is 2x the masked matrix; ``squared=False``
    returns the plain Frobenius norm.
    """
    eff = _off_diagonal(coefficients)
    total = (eff * eff).sum()
    return total if squared else torch.sqrt(total)


class SelfExpressionLayer(nn.Module):
    """nn.Module wrapper owning the trainable coefficient matrix."""

    def __init__(self, num_nodes: int):
        super().__init__()
        init = torch.as_tensor(init_self_expression(num_nodes), dtype=torch.get_default_dtype())
        self.coefficients = nn.Parameter(init)

    @property
    def num_nodes(self) -> int:
        return self.coefficients.shape[0]

    def effective_coefficients(self) -> torch.Tensor:
        return _off_diagonal(self.coefficients)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self_express(z, self.coefficients)

    def regularizer(self, squared: bool = True) -> torch.Tensor:
        return coef_regularizer(self.coefficients, squared=squared)
