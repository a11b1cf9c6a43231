"""Continual instruction-tuning loop.

Each optimizer step consumes one scheduled batch; the loss is the mean over
the batch of per-example mean cross entropy, so every example weighs equally
regardless of its length or origin. The learning rate decays linearly to
zero over max_steps. Training is sequential and deterministic for a fixed
seed and schedule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..errors import EmptyData, NonFiniteLoss, ValidationError
from ..instructions import InstructionDataset
from ..replay import MixBatch
from .network import TinyLM, loss_and_grads, sequence_losses
from .optim import AdamW, linear_decay_lr
from .vocab import Vocab, encode_batch


@dataclass
class TrainConfig:
    max_steps: int
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 0
    eval_interval: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    loss_on_prompt: bool = False

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")
        if min(self.learning_rate, self.eps) <= 0 or self.batch_size < 1:
            raise ValidationError("learning_rate, eps, and batch_size must be positive")


@dataclass
class LossCurve:
    train: list[tuple[int, float]] = field(default_factory=list)
    val: dict[str, list[tuple[int, float]]] = field(default_factory=dict)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "tag", "split", "loss"])
            for step, loss in self.train:
                writer.writerow([step, "train", "train", repr(loss)])
            for tag in sorted(self.val):
                for step, loss in self.val[tag]:
                    writer.writerow([step, tag, "val", repr(loss)])

    @classmethod
    def read_csv(cls, path: str | Path) -> "LossCurve":
        curve = cls()
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"step", "tag", "split", "loss"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValidationError(f"{path}: loss-curve CSV must have columns {sorted(required)}")
            for row in reader:
                step, loss = int(row["step"]), float(row["loss"])
                if row["split"] == "train":
                    curve.train.append((step, loss))
                else:
                    curve.val.setdefault(row["tag"], []).append((step, loss))
        return curve


def _batch_weights(mask: np.ndarray) -> np.ndarray:
    """Per-position weights giving each example weight 1/B and each of its
    supervised positions an equal share."""
    counts = mask.sum(axis=1, keepdims=True).astype(np.float64)
    if (counts == 0).any():
        raise ValidationError("an example in the batch has no supervised positions")
    return mask.astype(np.float64) / (counts * mask.shape[0])


def dataset_loss(
    model: TinyLM,
    dataset: InstructionDataset,
    vocab: Vocab,
    batch_size: int = 64,
    loss_on_prompt: bool = False,
) -> float:
    """Mean per-example loss over a dataset; no parameter updates."""
    if not dataset.examples:
        raise EmptyData("cannot evaluate an empty dataset")
    total = 0.0
    for lo in range(0, len(dataset.examples), batch_size):
        chunk = dataset.examples[lo:lo + batch_size]
        ids, mask = encode_batch(chunk, vocab, model.cfg.context, loss_on_prompt)
        total += float(sequence_losses(model, ids, mask).sum())
    return total / len(dataset.examples)


def task_loss(
    model: TinyLM,
    dataset: InstructionDataset,
    vocab: Vocab,
    batch_size: int = 64,
    loss_on_prompt: bool = False,
) -> dict[str, float]:
    """Mean per-example loss grouped by task tag; no parameter updates."""
    if not dataset.examples:
        raise EmptyData("cannot evaluate an empty dataset")
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for lo in range(0, len(dataset.examples), batch_size):
        chunk = dataset.examples[lo:lo + batch_size]
        ids, mask = encode_batch(chunk, vocab, model.cfg.context, loss_on_prompt)
        losses = sequence_losses(model, ids, mask)
        for ex, loss in zip(chunk, losses):
            tag = ex.task.value
            sums[tag] = sums.get(tag, 0.0) + float(loss)
            counts[tag] = counts.get(tag, 0) + 1
    return {tag: sums[tag] / counts[tag] for tag in sorted(sums)}


def train(
    model: TinyLM,
    schedule: Sequence[MixBatch],
    cfg: TrainConfig,
    val_sets: Mapping[str, InstructionDataset] | None = None,
    vocab: Vocab | None = None,
) -> tuple[TinyLM, LossCurve]:
    """Run min(cfg.max_steps, len(schedule)) optimizer steps over the schedule.

    Validation losses are recorded every cfg.eval_interval steps and at the
    final step: one pooled series per named validation set, plus per-task
    series named ``<set>:<task>`` when a set mixes task tags.
    """
    if not schedule:
        raise ValidationError("schedule is empty")
    vocab = vocab or model.vocab
    if vocab is None:
        raise ValidationError("no vocabulary supplied (model.vocab is unset)")

    val_sets = dict(val_sets or {})
    optimizer = AdamW(
        model.params, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
        weight_decay=cfg.weight_decay,
    )
    curve = LossCurve()
    encode_cache: dict = {}
    steps = min(cfg.max_steps, len(schedule))

    def record_val(step: int) -> None:
        for name, ds in val_sets.items():
            per_task = task_loss(model, ds, vocab, loss_on_prompt=cfg.loss_on_prompt)
            pooled = dataset_loss(model, ds, vocab, loss_on_prompt=cfg.loss_on_prompt)
            curve.val.setdefault(name, []).append((step, pooled))
            if len(per_task) > 1:
                for tag, loss in per_task.items():
                    curve.val.setdefault(f"{name}:{tag}", []).append((step, loss))

    for step in range(steps):
        batch = schedule[step]
        lr = linear_decay_lr(cfg.learning_rate, step, cfg.max_steps)
        ids, mask = encode_batch(
            batch.items, vocab, model.cfg.context, cfg.loss_on_prompt, cache=encode_cache
        )
        loss, grads = loss_and_grads(model, ids, _batch_weights(mask))
        if not np.isfinite(loss):
            raise NonFiniteLoss(step, [ex.example_id for ex in batch.items])
        optimizer.step(model.params, grads, lr)
        curve.train.append((step, float(loss)))
        if val_sets and (step % cfg.eval_interval == cfg.eval_interval - 1 or step == steps - 1):
            record_val(step)

    return model, curve
