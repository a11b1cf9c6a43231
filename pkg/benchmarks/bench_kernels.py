"""Benchmark the compiled kernels against the numpy reference backend.

Times each fused op on training-shaped inputs, then a full forward/backward
step of the tiny model under each backend. Run from the repo root:

    python benchmarks/bench_kernels.py [--dim 64] [--seq 80] [--batch 32]
"""

import argparse
import time

import numpy as np

from ia1.model import kernels
from ia1.model.network import ModelConfig, TinyLM, loss_and_grads


def timeit(fn, repeat=30, warmup=3):
    for _ in range(warmup):
        fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_ops(dim: int, seq: int, batch: int, heads: int, dtype=np.float32):
    rng = np.random.default_rng(0)
    rows = batch * seq
    vocab = 96

    x = np.ascontiguousarray(rng.standard_normal((rows, dim)), dtype=dtype)
    gamma = np.ones(dim, dtype=dtype)
    beta = np.zeros(dim, dtype=dtype)
    dy = np.ascontiguousarray(rng.standard_normal((rows, dim)), dtype=dtype)
    scores = np.ascontiguousarray(rng.standard_normal((batch * heads, seq, seq)), dtype=dtype)
    logits = np.ascontiguousarray(rng.standard_normal((rows, vocab)), dtype=dtype)
    targets = rng.integers(0, vocab, size=rows)
    weights = np.abs(rng.standard_normal(rows))
    ids = rng.integers(0, vocab, size=rows)
    grads = np.ascontiguousarray(rng.standard_normal((rows, dim)), dtype=dtype)

    cases = {}
    for name in kernels.available_backends():
        k = kernels.get_backend(name)
        y, mean, rstd = k.layer_norm_forward(x, gamma, beta, 1e-5)
        probs = k.causal_softmax_forward(scores)
        out = np.zeros((vocab, dim), dtype=dtype)
        cases[name] = {
            "layer_norm fwd": lambda k=k: k.layer_norm_forward(x, gamma, beta, 1e-5),
            "layer_norm bwd": lambda k=k, m=mean, r=rstd: k.layer_norm_backward(dy, x, gamma, m, r),
            "causal_softmax fwd": lambda k=k: k.causal_softmax_forward(scores),
            "causal_softmax bwd": lambda k=k, p=probs: k.causal_softmax_backward(scores, p),
            "cross_entropy fwd+bwd": lambda k=k: k.cross_entropy_forward_backward(
                logits, targets, weights
            ),
            "embedding scatter-add": lambda k=k, o=out: k.embedding_scatter_add(o, ids, grads),
        }
    return cases


def bench_train_step(backend: str, dim: int, seq: int, batch: int, heads: int):
    import importlib
    import os

    os.environ["IA1_KERNELS"] = backend
    import ia1.model.kernels as kmod

    importlib.reload(kmod)
    import ia1.model.network as net

    importlib.reload(net)

    cfg = net.ModelConfig(vocab_size=96, dim=dim, n_layers=2, n_heads=heads, context=seq)
    model = net.TinyLM.init(cfg, seed=0)
    rng = np.random.default_rng(1)
    ids = rng.integers(0, 96, size=(batch, seq))
    w = np.zeros((batch, seq))
    w[:, seq // 2:] = 1.0
    w = w / w.sum(axis=1, keepdims=True) / batch
    return timeit(lambda: net.loss_and_grads(model, ids, w), repeat=10)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--seq", type=int, default=80)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--heads", type=int, default=2)
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    print(f"shapes: batch={args.batch} seq={args.seq} dim={args.dim} heads={args.heads}\n")

    cases = bench_ops(args.dim, args.seq, args.batch, args.heads)
    ops = list(next(iter(cases.values())))
    width = max(len(op) for op in ops)
    header = f"{'op':<{width}}  " + "".join(f"{b:>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for op in ops:
        times = [timeit(cases[b][op]) for b in backends]
        row = f"{op:<{width}}  " + "".join(f"{t * 1e6:>12.1f}us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)

    print("\nfull train step (forward + backward, 2 layers):")
    step_times = {}
    for backend in backends:
        step_times[backend] = bench_train_step(backend, args.dim, args.seq, args.batch, args.heads)
        print(f"  {backend:>10}: {step_times[backend] * 1e3:.2f} ms")
    if len(step_times) == 2:
        print(f"  speedup: {step_times['reference'] / step_times['cython']:.2f}x")


if __name__ == "__main__":
    main()
