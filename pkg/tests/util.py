"""Shared test helpers: independent brute-force oracles and a central
finite-difference gradient checker. Everything here is deliberately written
as straight-line scalar code, separate from the library's vectorized paths.
"""

import math

import numpy as np
import torch


def cosine(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def knn_mask_oracle(x, k):
    """Per-row argsort of pairwise cosine similarities, ties to lower index."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        scored = [(-cosine(x[i], x[j]), j) for j in range(n) if j != i]
        scored.sort()
        for _, j in scored[: min(k, n - 1)]:
            mask[i, j] = True
    return mask


def nbr_loss_oracle(z, mask, temperature=1.0):
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    total = 0.0
    for i in range(n):
        num = sum(math.exp(cosine(z[i], z[j]) / temperature) for j in range(n) if mask[i][j])
        den = sum(math.exp(cosine(z[i], z[p]) / temperature) for p in range(n) if p != i)
        total += -math.log(num / den)
    return total


def cse_loss_oracle(z, z_hat, temperature=1.0):
    z = np.asarray(z, dtype=np.float64)
    z_hat = np.asarray(z_hat, dtype=np.float64)
    n = z.shape[0]
    total = 0.0
    for i in range(n):
        num = math.exp(cosine(z[i], z_hat[i]) / temperature)
        den = sum(math.exp(cosine(z[i], z_hat[j]) / temperature) for j in range(n))
        total += -math.log(num / den)
    return total


def self_express_oracle(z, c):
    z = np.asarray(z, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    n = z.shape[0]
    out = np.zeros_like(z)
    for i in range(n):
        for j in range(n):
            if i != j:
                out[i] += c[i, j] * z[j]
    return out


def attention_layer_oracle(h, adj, weight, attention, slope=0.2):
    """Scalar evaluation of softmax attention with a linear activation."""
    h = np.asarray(h, dtype=np.float64)
    adj = np.asarray(adj)
    wh = h @ np.asarray(weight, dtype=np.float64)
    attention = np.asarray(attention, dtype=np.float64)
    n = h.shape[0]
    out = np.zeros_like(wh)
    for i in range(n):
        neighbors = [j for j in range(n) if adj[i, j] > 0]
        scores = []
        for j in neighbors:
            e = float(attention @ np.concatenate([wh[i], wh[j]]))
            scores.append(e if e > 0 else slope * e)
        scores = np.asarray(scores)
        weights = np.exp(scores - scores.max())
        weights = weights / weights.sum()
        for w, j in zip(weights, neighbors):
            out[i] += w * wh[j]
    return out


def acc_bruteforce(pred, truth):
    """Maximum matched fraction over all label bijections (k! enumeration)."""
    from itertools import permutations

    pred = np.asarray(pred)
    truth = np.asarray(truth)
    pred_ids = sorted(set(pred.tolist()))
    truth_ids = sorted(set(truth.tolist()))
    size = max(len(pred_ids), len(truth_ids))
    table = np.zeros((size, size), dtype=np.int64)
    for p, t in zip(pred, truth):
        table[pred_ids.index(p), truth_ids.index(t)] += 1
    best = 0
    for perm in permutations(range(size)):
        best = max(best, sum(table[i, perm[i]] for i in range(size)))
    return best / pred.size


def finite_difference_gradients(loss_fn, tensors, h=1e-6):
    grads = []
    with torch.no_grad():
        for tensor in tensors:
            grad = torch.zeros_like(tensor)
            flat = tensor.view(-1)
            grad_flat = grad.view(-1)
            for idx in range(flat.numel()):
                original = flat[idx].item()
                flat[idx] = original + h
                plus = float(loss_fn())
                flat[idx] = original - h
                minus = float(loss_fn())
                flat[idx] = original
                grad_flat[idx] = (plus - minus) / (2.0 * h)
            grads.append(grad)
    return grads


def assert_gradients_match(loss_fn, tensors, rtol=1e-4, atol=1e-7, h=1e-6):
    """Analytic (autograd) vs central-difference gradients, elementwise."""
    loss = loss_fn()
    analytic = torch.autograd.grad(loss, tensors)
    numeric = finite_difference_gradients(loss_fn, tensors, h=h)
    for a, n in zip(analytic, numeric):
        gap = (a - n).abs()
        scale = torch.maximum(a.abs(), n.abs())
        bad = gap > atol + rtol * scale
        assert not bool(bad.any()), (
            f"gradient mismatch: max abs gap {gap.max().item():.3e}, "
            f"worst rel {(gap / scale.clamp_min(1e-12)).max().item():.3e}"
        )
