"""Decoupled-weight-decay adaptive-moment optimizer and the LR schedule."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def linear_decay_lr(lr0: float, step: int, max_steps: int) -> float:
    """lr(step) = lr0 * max(0, 1 - step / max_steps); step 0 is the first update."""
    if max_steps < 1:
        raise ValidationError(f"max_steps must be >= 1, got {max_steps}")
    return lr0 * max(0.0, 1.0 - step / max_steps)


class AdamW:
    """AdamW with bias correction; decay applies to matrices only.

    Biases and layer-norm parameters (ndim < 2) are excluded from weight
    decay, following standard practice for transformer training.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.beta1, self.beta2, self.eps, self.weight_decay = beta1, beta2, eps, weight_decay
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay and p.ndim >= 2:
                update = update + self.weight_decay * p
            p -= (lr * update).astype(p.dtype, copy=False)
