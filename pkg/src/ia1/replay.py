"""Experience-replay pool and interleaved batch scheduling.

A fixed pool of r examples sampled once from the past data is reused for the
whole tuning run. Each epoch covers every new example exactly once in
shuffled order; old slots are filled by cycling through an independently
shuffled pool (reshuffled on every full pass). Full batches interleave the
two sources positionally: old items at even positions, new items at odd.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    EmptyNewData,
    OddBatchSize,
    ReplayLargerThanSource,
    SchemaViolation,
    ValidationError,
)
from .instructions import InstructionDataset, InstructionExample, dataset_digest
from .seeding import derive_seed
from .templates import Task


@dataclass
class ReplayPool:
    examples: list[InstructionExample]
    r: int
    source_digest: str


@dataclass(frozen=True)
class MixBatch:
    items: tuple[InstructionExample, ...]
    half_size: int


def sample_replay(old_data: InstructionDataset, r: int, seed: int) -> ReplayPool:
    """Uniform sample of r distinct past examples, retagged as replay items."""
    if r < 0:
        raise ValidationError(f"replay size must be >= 0, got {r}")
    if r > len(old_data.examples):
        raise ReplayLargerThanSource(
            f"requested r={r} from {len(old_data.examples)} past examples"
        )
    digest = dataset_digest(old_data)
    if r == 0:
        return ReplayPool([], 0, digest)
    idx = np.random.default_rng(seed).choice(len(old_data.examples), size=r, replace=False)
    picked = [
        dataclasses.replace(old_data.examples[i], task=Task.REPLAY) for i in sorted(idx.tolist())
    ]
    return ReplayPool(picked, r, digest)


class _PoolCycler:
    """Endless iterator over the pool, reshuffling after each full pass."""

    def __init__(self, pool: ReplayPool, rng: np.random.Generator):
        self._pool = pool
        self._rng = rng
        self._order: list[int] = []
        self._pos = 0

    def __next__(self) -> InstructionExample:
        if self._pos >= len(self._order):
            self._order = self._rng.permutation(self._pool.r).tolist()
            self._pos = 0
        item = self._pool.examples[self._order[self._pos]]
        self._pos += 1
        return item


def schedule_epoch(
    pool: ReplayPool,
    new_data: InstructionDataset,
    batch_size: int,
    seed: int,
    shuffle_within_batch: bool = False,
) -> list[MixBatch]:
    """One epoch of interleaved batches covering each new example exactly once.

    With an empty pool the epoch degenerates to plain shuffled batches of new
    data. `shuffle_within_batch` breaks the strict positional alternation
    (off by default).
    """
    if batch_size < 2 or batch_size % 2 != 0:
        raise OddBatchSize(f"batch size must be even and >= 2, got {batch_size}")
    if not new_data.examples:
        raise EmptyNewData("new dataset has no examples")

    rng_new = np.random.default_rng(derive_seed(seed, "new-order"))
    rng_old = np.random.default_rng(derive_seed(seed, "old-order"))
    rng_mix = np.random.default_rng(derive_seed(seed, "within-batch"))

    new_order = rng_new.permutation(len(new_data.examples)).tolist()
    batches: list[MixBatch] = []

    if pool.r == 0:
        for lo in range(0, len(new_order), batch_size):
            chunk = [new_data.examples[i] for i in new_order[lo:lo + batch_size]]
            if shuffle_within_batch:
                chunk = [chunk[i] for i in rng_mix.permutation(len(chunk))]
            batches.append(MixBatch(tuple(chunk), half_size=(len(chunk) + 1) // 2))
        return batches

    n = batch_size // 2
    cycler = _PoolCycler(pool, rng_old)
    for lo in range(0, len(new_order), n):
        chunk = new_order[lo:lo + n]
        items: list[InstructionExample] = []
        for new_idx in chunk:
            items.append(next(cycler))
            items.append(new_data.examples[new_idx])
        if shuffle_within_batch:
            items = [items[i] for i in rng_mix.permutation(len(items))]
        batches.append(MixBatch(tuple(items), half_size=len(chunk)))
    return batches


def build_training_schedule(
    pool: ReplayPool,
    new_data: InstructionDataset,
    batch_size: int,
    seed: int,
    min_steps: int,
    shuffle_within_batch: bool = False,
) -> list[MixBatch]:
    """Concatenate epochs (each with a derived seed) until at least min_steps batches exist."""
    if min_steps < 1:
        raise ValidationError(f"min_steps must be >= 1, got {min_steps}")
    batches: list[MixBatch] = []
    epoch = 0
    while len(batches) < min_steps:
        batches.extend(
            schedule_epoch(pool, new_data, batch_size, derive_seed(seed, "epoch", epoch),
                           shuffle_within_batch)
        )
        epoch += 1
    return batches


# Batch-plan files: an audit-friendly materialization of a schedule as
# line-delimited JSON of (source, example_id) lists.

@dataclass(frozen=True)
class PlanBatch:
    half_size: int
    items: tuple[tuple[str, str], ...]  # (source in {"old","new"}, example_id)


def plan_from_batches(batches: Sequence[MixBatch]) -> list[PlanBatch]:
    plan = []
    for b in batches:
        items = tuple(
            ("old" if ex.task == Task.REPLAY else "new", ex.example_id) for ex in b.items
        )
        plan.append(PlanBatch(b.half_size, items))
    return plan


def write_batch_plan(plan: Sequence[PlanBatch], path: str | Path, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"plan": meta or {}}, sort_keys=True, separators=(",", ":")) + "\n")
        for b in plan:
            record = {"half_size": b.half_size, "items": [list(it) for it in b.items]}
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")


def read_batch_plan(path: str | Path) -> tuple[dict, list[PlanBatch]]:
    meta: dict | None = None
    plan: list[PlanBatch] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                raise SchemaViolation("blank line", line_no)
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"not valid JSON: {exc.msg}", line_no) from exc
            if line_no == 1:
                if not isinstance(record, dict) or set(record) != {"plan"}:
                    raise SchemaViolation("first line must be the plan header", 1)
                meta = record["plan"]
                continue
            if set(record) != {"half_size", "items"}:
                raise SchemaViolation("batch record needs exactly half_size and items", line_no)
            try:
                items = tuple((str(src), str(eid)) for src, eid in record["items"])
            except (TypeError, ValueError) as exc:
                raise SchemaViolation(f"bad items: {exc}", line_no) from exc
            if any(src not in ("old", "new") for src, _ in items):
                raise SchemaViolation("item source must be 'old' or 'new'", line_no)
            plan.append(PlanBatch(int(record["half_size"]), items))
    if meta is None:
        raise SchemaViolation("empty file (missing plan header)", 1)
    return meta, plan


def resolve_batch_plan(
    plan: Sequence[PlanBatch],
    new_data: InstructionDataset,
    old_data: InstructionDataset | None = None,
) -> list[MixBatch]:
    """Rehydrate MixBatches from a plan plus the datasets it references."""
    new_by_id = {ex.example_id: ex for ex in new_data.examples}
    old_by_id = (
        {ex.example_id: dataclasses.replace(ex, task=Task.REPLAY) for ex in old_data.examples}
        if old_data is not None
        else {}
    )
    batches = []
    for i, b in enumerate(plan):
        items = []
        for src, eid in b.items:
            table = old_by_id if src == "old" else new_by_id
            if eid not in table:
                raise SchemaViolation(f"batch {i}: unknown {src} example id {eid!r}")
            items.append(table[eid])
        batches.append(MixBatch(tuple(items), b.half_size))
    return batches
