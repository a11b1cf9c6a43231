"""Numerical gradient verification via central finite differences.

The model is lifted to float64 before checking; parameter coordinates are
sampled uniformly over the flattened parameter vector so every layer type is
exercised with enough samples.
"""

from __future__ import annotations

import numpy as np

from .network import TinyLM, loss_and_grads


def grad_check(
    model: TinyLM,
    ids: np.ndarray,
    weights: np.ndarray,
    eps: float = 1e-4,
    n_samples: int = 50,
    seed: int = 0,
) -> float:
    """Max relative error |g_a - g_n| / max(1e-8, |g_a| + |g_n|) over sampled coordinates."""
    m = model.astype(np.float64)
    _, analytic = loss_and_grads(m, ids, weights)

    names = sorted(m.params)
    sizes = np.array([m.params[n].size for n in names])
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    total = int(offsets[-1])

    rng = np.random.default_rng(seed)
    coords = rng.choice(total, size=min(n_samples, total), replace=False)

    worst = 0.0
    for flat_idx in coords:
        pi = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        name = names[pi]
        local = int(flat_idx - offsets[pi])
        param = m.params[name]
        orig = param.flat[local]

        param.flat[local] = orig + eps
        loss_plus, _ = loss_and_grads(m, ids, weights)
        param.flat[local] = orig - eps
        loss_minus, _ = loss_and_grads(m, ids, weights)
        param.flat[local] = orig

        g_n = (loss_plus - loss_minus) / (2.0 * eps)
        g_a = float(analytic[name].flat[local])
        err = abs(g_a - g_n) / max(1e-8, abs(g_a) + abs(g_n))
        worst = max(worst, err)
    return worst
