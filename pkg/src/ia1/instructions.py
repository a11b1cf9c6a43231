"""Instruction example generation and dataset files.

Each (pair, task, direction) yields exactly one example, rendered through a
template drawn uniformly from that task's templates with a per-example seed
derived from (global seed, pair id, task, direction) — never from iteration
order, so generation is order-independent. Pairs whose sentence is too short
for the requested perturbation are skipped and counted in the manifest.

Dataset files are UTF-8 line-delimited JSON: a manifest record on the first
line, one example record per following line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import ParallelCorpus, language_tag
from .errors import NoTemplateForTask, SchemaViolation, TooShort, UnmaskableSentence, ValidationError
from .perturb import Granularity, mask_span, mask_word, normalize, tokenize
from .seeding import derive_seed
from .templates import (
    Task,
    TemplateSet,
    render_denoising_prompt,
    render_mono_denoising_prompt,
    render_translation_prompt,
)


class Direction(str, Enum):
    PIVOT_TO_NEW = "pivot2new"
    NEW_TO_PIVOT = "new2pivot"
    BOTH = "both"


@dataclass(frozen=True)
class InstructionExample:
    example_id: str
    task: Task
    src_lang: str
    tgt_lang: str
    input: str
    target: str
    template_id: str
    pair_id: int
    seed: int


@dataclass
class InstructionDataset:
    examples: list[InstructionExample]
    manifest: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InstructionDataset):
            return NotImplemented
        return self.examples == other.examples and self.manifest == other.manifest


RECORD_FIELDS = frozenset(
    {"example_id", "task", "src_lang", "tgt_lang", "input", "target", "template_id", "pair_id", "seed"}
)

# Tasks that may appear in a generated dataset, in generation order.
GENERATABLE_TASKS = (Task.DENOISE_WORD, Task.DENOISE_SPAN, Task.TRANSLATE, Task.MONO_DENOISE)

# Minimum target-side token counts per perturbing task.
_MIN_TOKENS = {Task.DENOISE_WORD: 2, Task.DENOISE_SPAN: 3, Task.MONO_DENOISE: 2}


def _oriented(pair, corpus: ParallelCorpus, direction: Direction):
    """Return (pivot_text, new_text, pivot_lang, new_lang) for one direction."""
    if direction == Direction.PIVOT_TO_NEW:
        return pair.src_text, pair.tgt_text, corpus.src_lang, corpus.tgt_lang
    return pair.tgt_text, pair.src_text, corpus.tgt_lang, corpus.src_lang


def generate_dataset(
    corpus: ParallelCorpus,
    tasks: Iterable[Task],
    templates: TemplateSet,
    global_seed: int,
    direction: Direction = Direction.PIVOT_TO_NEW,
) -> InstructionDataset:
    """Materialize one instruction example per (pair, task, direction)."""
    task_list = [t for t in GENERATABLE_TASKS if t in set(tasks)]
    if not task_list:
        raise ValidationError("no generatable tasks requested")
    by_task = {}
    for task in task_list:
        tpls = templates.by_task(task)
        if not tpls:
            raise NoTemplateForTask(f"template file provides no template for task {task.value!r}")
        by_task[task] = tpls

    directions = (
        (Direction.PIVOT_TO_NEW, Direction.NEW_TO_PIVOT)
        if direction == Direction.BOTH
        else (direction,)
    )

    names = templates.language_names
    examples: list[InstructionExample] = []
    skips = {task.value: 0 for task in task_list}

    for pair in corpus.pairs:
        for d in directions:
            pivot_text, new_text, pivot_lang, new_lang = _oriented(pair, corpus, d)
            for task in task_list:
                ex_seed = derive_seed(global_seed, pair.pair_id, task.value, d.value)
                rng = np.random.default_rng(ex_seed)
                tpls = by_task[task]
                tpl = tpls[int(rng.integers(len(tpls)))]
                perturb_seed = derive_seed(ex_seed, "perturb")

                sentence = tokenize(new_text)
                if task in _MIN_TOKENS and len(sentence) < _MIN_TOKENS[task]:
                    skips[task.value] += 1
                    continue

                try:
                    if task == Task.DENOISE_WORD:
                        perturbed = mask_word(sentence, perturb_seed)
                        prompt = render_denoising_prompt(
                            pivot_text, perturbed, tpl, pivot_lang, new_lang, names
                        )
                        src_l = pivot_lang
                    elif task == Task.DENOISE_SPAN:
                        perturbed = mask_span(sentence, perturb_seed)
                        prompt = render_denoising_prompt(
                            pivot_text, perturbed, tpl, pivot_lang, new_lang, names
                        )
                        src_l = pivot_lang
                    elif task == Task.TRANSLATE:
                        prompt = render_translation_prompt(
                            pivot_text, tpl, pivot_lang, new_lang, names
                        )
                        src_l = pivot_lang
                    else:  # MONO_DENOISE: perturb-then-denoise on the new side alone
                        if len(sentence) >= 3 and bool(rng.integers(2)):
                            perturbed = mask_span(sentence, perturb_seed)
                        else:
                            perturbed = mask_word(sentence, perturb_seed)
                        prompt = render_mono_denoising_prompt(perturbed, tpl, new_lang, names)
                        src_l = new_lang
                except (TooShort, UnmaskableSentence):
                    skips[task.value] += 1
                    continue

                examples.append(
                    InstructionExample(
                        example_id=f"{task.value}:{d.value}:{pair.pair_id}",
                        task=task,
                        src_lang=src_l,
                        tgt_lang=new_lang,
                        input=prompt,
                        target=normalize(new_text),
                        template_id=tpl.template_id,
                        pair_id=pair.pair_id,
                        seed=ex_seed,
                    )
                )

    expected = len(corpus.pairs) * len(directions) * len(task_list)
    manifest = {
        "format": 1,
        "src_lang": corpus.src_lang,
        "tgt_lang": corpus.tgt_lang,
        "num_pairs": len(corpus.pairs),
        "tasks": [t.value for t in task_list],
        "direction": direction.value,
        "global_seed": global_seed,
        "template_digest": templates.digest,
        "expected_examples": expected,
        "skips": skips,
        "total_skipped": sum(skips.values()),
        "example_count": len(examples),
    }
    return InstructionDataset(examples, manifest)


def _dump_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def example_to_record(ex: InstructionExample) -> dict:
    record = asdict(ex)
    record["task"] = ex.task.value
    return record


def example_from_record(record: dict, line: int) -> InstructionExample:
    if not isinstance(record, dict):
        raise SchemaViolation("record is not an object", line)
    got = set(record)
    if got != RECORD_FIELDS:
        missing, extra = RECORD_FIELDS - got, got - RECORD_FIELDS
        raise SchemaViolation(f"bad record fields (missing {sorted(missing)}, extra {sorted(extra)})", line)
    try:
        return InstructionExample(
            example_id=str(record["example_id"]),
            task=Task(record["task"]),
            src_lang=language_tag(record["src_lang"]),
            tgt_lang=language_tag(record["tgt_lang"]),
            input=str(record["input"]),
            target=str(record["target"]),
            template_id=str(record["template_id"]),
            pair_id=int(record["pair_id"]),
            seed=int(record["seed"]),
        )
    except (ValueError, TypeError, ValidationError) as exc:
        raise SchemaViolation(str(exc), line) from exc


def write_dataset(ds: InstructionDataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump_record({"manifest": ds.manifest}) + "\n")
        for ex in ds.examples:
            fh.write(_dump_record(example_to_record(ex)) + "\n")


def read_dataset(path: str | Path) -> InstructionDataset:
    examples: list[InstructionExample] = []
    manifest: dict | None = None
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
                if not isinstance(record, dict) or set(record) != {"manifest"}:
                    raise SchemaViolation("first line must be the manifest record", 1)
                manifest = record["manifest"]
                continue
            examples.append(example_from_record(record, line_no))
    if manifest is None:
        raise SchemaViolation("empty file (missing manifest)", 1)
    seen = set()
    for ex in examples:
        if ex.example_id in seen:
            raise SchemaViolation(f"duplicate example_id {ex.example_id!r}")
        seen.add(ex.example_id)
    return InstructionDataset(examples, manifest)


def dataset_digest(ds: InstructionDataset) -> str:
    """Content digest over the serialized records (manifest excluded)."""
    h = hashlib.sha256()
    for ex in ds.examples:
        h.update(_dump_record(example_to_record(ex)).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def load_tsv_instructions(path: str | Path, lang: str = "und") -> InstructionDataset:
    """Ingest generic two-column (input, target) TSV as replay-tagged examples."""
    lang = language_tag(lang)
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise SchemaViolation(f"expected 2 tab-separated columns, got {len(cols)}", line_no)
            prompt, target = cols
            if not target:
                raise SchemaViolation("empty target", line_no)
            examples.append(
                InstructionExample(
                    example_id=f"replay:{line_no - 1}",
                    task=Task.REPLAY,
                    src_lang=lang,
                    tgt_lang=lang,
                    input=prompt,
                    target=target,
                    template_id="external",
                    pair_id=line_no - 1,
                    seed=0,
                )
            )
    manifest = {"format": 1, "source": str(path), "kind": "replay_tsv", "example_count": len(examples)}
    return InstructionDataset(examples, manifest)
