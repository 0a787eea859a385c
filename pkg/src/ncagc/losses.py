"""Training objectives: attribute reconstruction, neighborhood contrast,
contrastive self-expression (plus the plain variant used by ablations),
coefficient regularization, and their weighted total.

All pairwise similarities are cosine; zero-norm rows are defined to have
similarity 0 to everything, which keeps every loss finite. The contrastive
losses use log-sum-exp directly on the (bounded) similarities; there is a
temperature hook but it defaults to 1 and similarities enter exp() raw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import NumericalError

_NORM_FLOOR = 1e-24  # floor on squared row norms before the rsqrt


def cosine_similarity(a, b) -> float:
    """s(a, b) = a.b / (|a||b|), with 0 when either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def _normalize_rows(x: torch.Tensor) -> torch.Tensor:
    norm = torch.sqrt((x * x).sum(dim=1, keepdim=True).clamp_min(_NORM_FLOOR))
    return x / norm


def cosine_similarity_matrix(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """S[i, j] = s(a_i, b_j) over rows; differentiable, zero-norm rows give 0."""
    return _normalize_rows(a) @ _normalize_rows(b).T


def reconstruction_loss(x: torch.Tensor, x_hat: torch.Tensor) -> torch.Tensor:
    """Half the squared Frobenius distance between attributes and their reconstruction."""
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(x_hat.shape)}")
    diff = x - x_hat
    return 0.5 * (diff * diff).sum()


def _as_bool_mask(positives, n: int, device, k_hint=None) -> torch.Tensor:
    mask = getattr(positives, "mask", positives)
    mask = torch.as_tensor(np.asarray(mask)) if not isinstance(mask, torch.Tensor) else mask
    mask = mask.to(device=device, dtype=torch.bool)
    if mask.shape != (n, n):
        raise ValueError(f"positive mask must be ({n}, {n}), got {tuple(mask.shape)}")
    return mask


def neighborhood_contrast_loss(z: torch.Tensor, positives, temperature: float = 1.0,
                               exclude_positives_from_denominator: bool = False) -> torch.Tensor:
    """Sum over nodes of -log(sum_pos exp(s) / sum_others exp(s)).

    The numerator runs over each node's K positives; the denominator over
    all other nodes (positives included, unless the exclusion variant is
    requested). Nonnegative; exactly 0 when the positives are all others.
    """
    n = z.shape[0]
    if n < 2:
        raise ValueError("neighborhood contrast needs at least 2 nodes")
    mask = _as_bool_mask(positives, n, z.device)
    sims = cosine_similarity_matrix(z, z) / temperature
    not_self = ~torch.eye(n, dtype=torch.bool, device=z.device)
    denom_mask = (not_self & ~mask) if exclude_positives_from_denominator else not_self
    if not bool(denom_mask.any(dim=1).all()):
        raise ValueError("denominator mask leaves some node with no counterparts")
    neg_inf = float("-inf")
    numer = torch.logsumexp(sims.masked_fill(~mask, neg_inf), dim=1)
    denom = torch.logsumexp(sims.masked_fill(~denom_mask, neg_inf), dim=1)
    return (denom - numer).sum()


def contrastive_self_expression_loss(z: torch.Tensor, z_hat: torch.Tensor,
                                     temperature: float = 1.0) -> torch.Tensor:
    """Sum over nodes of -log softmax: each node against its own self-expressed
    reconstruction, with all reconstructions (its own included) in the denominator.
    """
    if z.shape != z_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(z.shape)} vs {tuple(z_hat.shape)}")
    sims = cosine_similarity_matrix(z, z_hat) / temperature
    denom = torch.logsumexp(sims, dim=1)
    return (denom - sims.diagonal()).sum()


def plain_self_expression_loss(z: torch.Tensor, z_hat: torch.Tensor) -> torch.Tensor:
    """Squared Frobenius distance between representations before/after self-expression."""
    if z.shape != z_hat.shape:
        raise ValueError(f"shape mismatch: {tuple(z.shape)} vs {tuple(z_hat.shape)}")
    diff = z - z_hat
    return (diff * diff).sum()


@dataclass(frozen=True)
class LossBreakdown:
    """Per-step record of the loss components and their exact weighted sum."""

    rec: float
    nbr: float
    cse: float
    coef: float
    total: float
    weights: tuple[float, float, float]

    CSV_HEADER = "epoch,rec,nbr,cse,coef,total"

    def csv_row(self, epoch: int) -> str:
        return (f"{epoch},{self.rec!r},{self.nbr!r},{self.cse!r},"
                f"{self.coef!r},{self.total!r}")


def total_loss(rec, nbr, cse, coef, weights) -> LossBreakdown:
    """Combine the component values into a LossBreakdown.

    total = rec + w1*nbr + w2*cse + w3*coef, evaluated exactly in that
    order. Non-finite components raise a NumericalError naming the offender.
    """
    w1, w2, w3 = (float(w) for w in weights)
    values = {}
    for name, value in (("rec", rec), ("nbr", nbr), ("cse", cse), ("coef", coef)):
        value = float(value)
        if not np.isfinite(value):
            raise NumericalError("non-finite loss component", component=name)
        values[name] = value
    total = values["rec"] + w1 * values["nbr"] + w2 * values["cse"] + w3 * values["coef"]
    return LossBreakdown(rec=values["rec"], nbr=values["nbr"], cse=values["cse"],
                         coef=values["coef"], total=total, weights=(w1, w2, w3))
