"""Pure numpy kernels (fallback backend).

Same signatures and semantics as the compiled backend in ``_fastkern``:
row-wise fused ops where plain numpy would materialize several temporaries.
All functions are deterministic and allocate fresh outputs.
"""

from __future__ import annotations

import numpy as np

BACKEND = "reference"


def layer_norm_forward(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float):
    """Normalize rows of x; returns (y, mean, rstd) with mean/rstd kept for backward."""
    mean = x.mean(axis=-1)
    var = x.var(axis=-1)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[:, None]) * rstd[:, None]
    y = xhat * gamma + beta
    return y.astype(x.dtype, copy=False), mean, rstd


def layer_norm_backward(dy: np.ndarray, x: np.ndarray, gamma: np.ndarray,
                        mean: np.ndarray, rstd: np.ndarray):
    """Gradients of layer_norm_forward: returns (dx, dgamma, dbeta)."""
    xhat = (x - mean[:, None]) * rstd[:, None]
    dbeta = dy.sum(axis=0)
    dgamma = (dy * xhat).sum(axis=0)
    dyg = dy * gamma
    d = x.shape[-1]
    dx = rstd[:, None] * (
        dyg
        - dyg.mean(axis=-1)[:, None]
        - xhat * (dyg * xhat).mean(axis=-1)[:, None]
    )
    return dx.astype(x.dtype, copy=False), dgamma, dbeta


def causal_softmax_forward(scores: np.ndarray) -> np.ndarray:
    """Row softmax over (R, T, T) score blocks, restricted to j <= i (zero above diagonal)."""
    _, t, t2 = scores.shape
    assert t == t2, "scores must be square in the last two dims"
    mask = np.tril(np.ones((t, t), dtype=bool))
    masked = np.where(mask, scores, -np.inf)
    m = masked.max(axis=-1, keepdims=True)
    e = np.exp(masked - m)
    probs = e / e.sum(axis=-1, keepdims=True)
    return probs.astype(scores.dtype, copy=False)


def causal_softmax_backward(dprobs: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Jacobian-vector product of the causal row softmax."""
    inner = (dprobs * probs).sum(axis=-1, keepdims=True)
    return (probs * (dprobs - inner)).astype(probs.dtype, copy=False)


def nll_rows(logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-row negative log softmax probability of the target column. Forward only."""
    m = logits.max(axis=-1)
    lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=-1))
    picked = logits[np.arange(logits.shape[0]), targets]
    return (lse - picked).astype(np.float64, copy=False)


def cross_entropy_forward_backward(logits: np.ndarray, targets: np.ndarray,
                                   weights: np.ndarray):
    """Weighted NLL over rows plus its gradient: returns (loss, dlogits).

    loss = sum_p w_p * (-log softmax(logits_p)[targets_p]); rows with zero
    weight contribute nothing and get zero gradient.
    """
    n = logits.shape[0]
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    z = e.sum(axis=-1, keepdims=True)
    probs = e / z
    lse = (m + np.log(z)).reshape(n)
    rows = np.arange(n)
    nll = lse - logits[rows, targets]
    loss = float(np.dot(weights, nll))
    dlogits = probs * weights[:, None]
    dlogits[rows, targets] -= weights
    return loss, dlogits.astype(logits.dtype, copy=False)


def embedding_scatter_add(out: np.ndarray, ids: np.ndarray, grads: np.ndarray) -> None:
    """Accumulate grads rows into out rows selected by ids (duplicates sum). In place."""
    np.add.at(out, ids, grads)
