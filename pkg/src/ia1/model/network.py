"""Tiny decoder-only causal language model with hand-written backprop.

Pre-norm residual blocks (causal multi-head self-attention + 4x feed-forward),
learned positional embeddings, final layer norm, and an output projection
tied to the token embedding table. Matrix products go through BLAS via
numpy; the fused row-wise ops (layer norm, causal softmax, cross entropy,
embedding scatter-add) go through the selected kernel backend.

Gradients are verified against central finite differences in the test suite;
keep forward and backward in lockstep when editing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import AllMasked, EmptyData, IdOutOfRange, ValidationError
from . import kernels
from .vocab import Vocab

LN_EPS = 1e-5
_GELU_C0 = 0.7978845608028654  # sqrt(2/pi)
_GELU_C1 = 0.044715


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    dim: int = 64
    n_layers: int = 2
    n_heads: int = 2
    context: int = 256

    def __post_init__(self):
        if self.dim % self.n_heads != 0:
            raise ValidationError(f"dim {self.dim} not divisible by n_heads {self.n_heads}")
        if min(self.vocab_size, self.dim, self.n_layers, self.n_heads, self.context) < 1:
            raise ValidationError("all model dimensions must be >= 1")


def param_shapes(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical parameter order; checkpoints and optimizers follow it."""
    d = cfg.dim
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("tok_emb", (cfg.vocab_size, d)),
        ("pos_emb", (cfg.context, d)),
    ]
    for i in range(cfg.n_layers):
        p = f"blocks.{i}."
        shapes += [
            (p + "ln1.g", (d,)),
            (p + "ln1.b", (d,)),
            (p + "attn.w_qkv", (d, 3 * d)),
            (p + "attn.b_qkv", (3 * d,)),
            (p + "attn.w_out", (d, d)),
            (p + "attn.b_out", (d,)),
            (p + "ln2.g", (d,)),
            (p + "ln2.b", (d,)),
            (p + "ffn.w1", (d, 4 * d)),
            (p + "ffn.b1", (4 * d,)),
            (p + "ffn.w2", (4 * d, d)),
            (p + "ffn.b2", (d,)),
        ]
    shapes += [("ln_f.g", (d,)), ("ln_f.b", (d,))]
    return shapes


class TinyLM:
    """Parameter container plus forward pass. Vocab rides along for checkpoints."""

    def __init__(self, cfg: ModelConfig, params: dict[str, np.ndarray], vocab: Vocab | None = None):
        self.cfg = cfg
        self.params = params
        self.vocab = vocab

    @classmethod
    def init(
        cls,
        cfg: ModelConfig,
        seed: int,
        vocab: Vocab | None = None,
        dtype: np.dtype | type = np.float32,
    ) -> "TinyLM":
        """Deterministic init: N(0, 0.02) weights, zero biases, unit layer-norm gains."""
        rng = np.random.default_rng(seed)
        params: dict[str, np.ndarray] = {}
        for name, shape in param_shapes(cfg):
            leaf = name.rsplit(".", 1)[-1]
            if leaf in ("g",):
                arr = np.ones(shape)
            elif leaf.startswith("b"):
                arr = np.zeros(shape)
            else:
                arr = rng.normal(0.0, 0.02, size=shape)
            params[name] = arr.astype(dtype)
        return cls(cfg, params, vocab)

    @property
    def dtype(self) -> np.dtype:
        return self.params["tok_emb"].dtype

    def num_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "TinyLM":
        return TinyLM(self.cfg, {k: v.copy() for k, v in self.params.items()}, self.vocab)

    def astype(self, dtype) -> "TinyLM":
        return TinyLM(self.cfg, {k: v.astype(dtype) for k, v in self.params.items()}, self.vocab)

    def forward(self, ids) -> np.ndarray:
        """Logits for a single id sequence: (t,) -> (t, vocab_size)."""
        arr = np.asarray(ids, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("forward expects a non-empty 1-D id sequence")
        if arr.min() < 0 or arr.max() >= self.cfg.vocab_size:
            raise IdOutOfRange(
                f"ids must lie in [0, {self.cfg.vocab_size}), got range "
                f"[{arr.min()}, {arr.max()}]"
            )
        logits, _ = forward_batch(self, arr[None, :])
        return logits[0]


def _gelu(x: np.ndarray) -> np.ndarray:
    u = _GELU_C0 * (x + _GELU_C1 * x * x * x)
    return 0.5 * x * (1.0 + np.tanh(u))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    u = _GELU_C0 * (x + _GELU_C1 * x * x * x)
    t = np.tanh(u)
    du = _GELU_C0 * (1.0 + 3.0 * _GELU_C1 * x * x)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du


def _c2d(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x)


def forward_batch(model: TinyLM, ids: np.ndarray) -> tuple[np.ndarray, dict]:
    """Batched forward pass; returns (logits (B,T,V), cache for backward)."""
    cfg, p = model.cfg, model.params
    b, t = ids.shape
    if t > cfg.context:
        raise ValidationError(f"sequence length {t} exceeds context {cfg.context}")
    d, h = cfg.dim, cfg.n_heads
    dh = d // h
    scale = 1.0 / math.sqrt(dh)

    x = p["tok_emb"][ids] + p["pos_emb"][:t]
    cache: dict = {"ids": ids, "blocks": []}

    for i in range(cfg.n_layers):
        pre = f"blocks.{i}."
        x_in = x
        h1, mu1, rstd1 = kernels.layer_norm_forward(
            _c2d(x_in.reshape(b * t, d)), p[pre + "ln1.g"], p[pre + "ln1.b"], LN_EPS
        )
        h1 = h1.reshape(b, t, d)
        qkv = h1 @ p[pre + "attn.w_qkv"] + p[pre + "attn.b_qkv"]
        q, k, v = (
            a.reshape(b, t, h, dh).transpose(0, 2, 1, 3) for a in np.split(qkv, 3, axis=-1)
        )
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        probs = kernels.causal_softmax_forward(_c2d(scores.reshape(b * h, t, t)))
        probs = probs.reshape(b, h, t, t)
        att = (probs @ v).transpose(0, 2, 1, 3).reshape(b, t, d)
        proj = att @ p[pre + "attn.w_out"] + p[pre + "attn.b_out"]
        x_mid = x_in + proj

        h2, mu2, rstd2 = kernels.layer_norm_forward(
            _c2d(x_mid.reshape(b * t, d)), p[pre + "ln2.g"], p[pre + "ln2.b"], LN_EPS
        )
        h2 = h2.reshape(b, t, d)
        ff1 = h2 @ p[pre + "ffn.w1"] + p[pre + "ffn.b1"]
        act = _gelu(ff1)
        ff2 = act @ p[pre + "ffn.w2"] + p[pre + "ffn.b2"]
        x = x_mid + ff2

        cache["blocks"].append(
            dict(x_in=x_in, h1=h1, mu1=mu1, rstd1=rstd1, q=q, k=k, v=v, probs=probs,
                 att=att, x_mid=x_mid, h2=h2, mu2=mu2, rstd2=rstd2, ff1=ff1, act=act)
        )

    hf, muf, rstdf = kernels.layer_norm_forward(
        _c2d(x.reshape(b * t, d)), p["ln_f.g"], p["ln_f.b"], LN_EPS
    )
    hf = hf.reshape(b, t, d)
    logits = hf @ p["tok_emb"].T
    cache.update(x_last=x, hf=hf, muf=muf, rstdf=rstdf)
    return logits, cache


def backward_batch(model: TinyLM, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter, given d loss / d logits."""
    cfg, p = model.cfg, model.params
    ids = cache["ids"]
    b, t = ids.shape
    d, h = cfg.dim, cfg.n_heads
    dh = d // h
    scale = 1.0 / math.sqrt(dh)
    v_size = cfg.vocab_size

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}

    # Tied output projection: logits = hf @ tok_emb^T.
    hf = cache["hf"]
    dhf = dlogits @ p["tok_emb"]
    grads["tok_emb"] += dlogits.reshape(b * t, v_size).T @ hf.reshape(b * t, d)

    dx2d, dg, dbv = kernels.layer_norm_backward(
        _c2d(dhf.reshape(b * t, d)), _c2d(cache["x_last"].reshape(b * t, d)),
        p["ln_f.g"], cache["muf"], cache["rstdf"]
    )
    grads["ln_f.g"] += dg
    grads["ln_f.b"] += dbv
    dx = dx2d.reshape(b, t, d)

    for i in reversed(range(cfg.n_layers)):
        pre = f"blocks.{i}."
        blk = cache["blocks"][i]

        # x = x_mid + ffn(ln2(x_mid))
        dff2 = dx
        grads[pre + "ffn.w2"] += blk["act"].reshape(b * t, 4 * d).T @ dff2.reshape(b * t, d)
        grads[pre + "ffn.b2"] += dff2.sum(axis=(0, 1))
        dact = dff2 @ p[pre + "ffn.w2"].T
        dff1 = dact * _gelu_grad(blk["ff1"])
        grads[pre + "ffn.w1"] += blk["h2"].reshape(b * t, d).T @ dff1.reshape(b * t, 4 * d)
        grads[pre + "ffn.b1"] += dff1.sum(axis=(0, 1))
        dh2 = dff1 @ p[pre + "ffn.w1"].T
        dxm2d, dg, dbv = kernels.layer_norm_backward(
            _c2d(dh2.reshape(b * t, d)), _c2d(blk["x_mid"].reshape(b * t, d)),
            p[pre + "ln2.g"], blk["mu2"], blk["rstd2"]
        )
        grads[pre + "ln2.g"] += dg
        grads[pre + "ln2.b"] += dbv
        dx_mid = dx + dxm2d.reshape(b, t, d)

        # x_mid = x_in + attn(ln1(x_in))
        dproj = dx_mid
        grads[pre + "attn.w_out"] += blk["att"].reshape(b * t, d).T @ dproj.reshape(b * t, d)
        grads[pre + "attn.b_out"] += dproj.sum(axis=(0, 1))
        datt = (dproj @ p[pre + "attn.w_out"].T).reshape(b, t, h, dh).transpose(0, 2, 1, 3)
        dprobs = datt @ blk["v"].transpose(0, 1, 3, 2)
        dv = blk["probs"].transpose(0, 1, 3, 2) @ datt
        dscores = kernels.causal_softmax_backward(
            _c2d(dprobs.reshape(b * h, t, t)), _c2d(blk["probs"].reshape(b * h, t, t))
        ).reshape(b, h, t, t)
        dscores = dscores * scale
        dq = dscores @ blk["k"]
        dk = dscores.transpose(0, 1, 3, 2) @ blk["q"]
        dqkv = np.concatenate(
            [a.transpose(0, 2, 1, 3).reshape(b, t, d) for a in (dq, dk, dv)], axis=-1
        )
        grads[pre + "attn.w_qkv"] += blk["h1"].reshape(b * t, d).T @ dqkv.reshape(b * t, 3 * d)
        grads[pre + "attn.b_qkv"] += dqkv.sum(axis=(0, 1))
        dh1 = dqkv @ p[pre + "attn.w_qkv"].T
        dxi2d, dg, dbv = kernels.layer_norm_backward(
            _c2d(dh1.reshape(b * t, d)), _c2d(blk["x_in"].reshape(b * t, d)),
            p[pre + "ln1.g"], blk["mu1"], blk["rstd1"]
        )
        grads[pre + "ln1.g"] += dg
        grads[pre + "ln1.b"] += dbv
        dx = dx_mid + dxi2d.reshape(b, t, d)

    grads["pos_emb"][:t] += dx.sum(axis=0)
    kernels.embedding_scatter_add(
        grads["tok_emb"], _c2d(ids.reshape(b * t)), _c2d(dx.reshape(b * t, d))
    )
    return grads


def loss_and_grads(
    model: TinyLM, ids: np.ndarray, weights: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Weighted next-char cross entropy and its parameter gradients.

    ``weights[b, t]`` is the loss weight for predicting token ``ids[b, t]``
    from its prefix; position 0 can never be predicted and must carry zero
    weight.
    """
    if ids.ndim != 2:
        raise ValidationError("ids must be (batch, time)")
    w = np.ascontiguousarray(weights[:, 1:].astype(np.float64, copy=False).reshape(-1))
    if not (w > 0).any():
        raise AllMasked("no supervised positions in batch")
    if weights[:, 0].any():
        raise ValidationError("position 0 has no preceding context and cannot carry loss")

    logits, cache = forward_batch(model, ids)
    b, t, v = logits.shape
    flat = _c2d(logits[:, :-1, :].reshape(b * (t - 1), v))
    targets = _c2d(ids[:, 1:].reshape(-1))
    loss, dflat = kernels.cross_entropy_forward_backward(flat, targets, w)
    dlogits = np.zeros_like(logits)
    dlogits[:, :-1, :] = dflat.reshape(b, t - 1, v)
    grads = backward_batch(model, cache, dlogits)
    return loss, grads


def cross_entropy_loss(logits: np.ndarray, ids, loss_mask) -> float:
    """Mean over masked positions p of -log softmax(logits[p-1])[ids[p]]."""
    ids = np.asarray(ids, dtype=np.int64)
    mask = np.asarray(loss_mask)
    if logits.shape[0] != ids.shape[0] or ids.shape[0] != mask.shape[0]:
        raise ValidationError("logits, ids, and loss_mask must have equal length")
    if mask.sum() == 0:
        raise AllMasked("loss mask selects no positions")
    if mask[0]:
        raise ValidationError("position 0 has no preceding context and cannot carry loss")
    nll = kernels.nll_rows(_c2d(logits[:-1]), _c2d(ids[1:]))
    sel = mask[1:].astype(bool)
    return float(nll[sel].mean())


def sequence_losses(model: TinyLM, ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-example mean masked NLL for a padded batch: returns (B,) float64."""
    logits, _ = forward_batch(model, ids)
    b, t, v = logits.shape
    nll = kernels.nll_rows(
        _c2d(logits[:, :-1, :].reshape(b * (t - 1), v)), _c2d(ids[:, 1:].reshape(-1))
    ).reshape(b, t - 1)
    m = mask[:, 1:].astype(np.float64)
    counts = m.sum(axis=1)
    if (counts == 0).any():
        raise AllMasked("an example in the batch has no supervised positions")
    return (nll * m).sum(axis=1) / counts
