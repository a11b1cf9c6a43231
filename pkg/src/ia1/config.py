"""Run configuration for the end-to-end pipeline.

JSON with explicit seeds everywhere; validation checks that every referenced
file exists before any stage runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaViolation, ValidationError
from .instructions import Direction
from .templates import TASK_ALIASES, Task

CONFIG_VERSION = "1"


def parse_tasks(names: list[str]) -> list[Task]:
    tasks = []
    for name in names:
        key = name.strip().lower()
        if key in TASK_ALIASES:
            tasks.append(TASK_ALIASES[key])
        else:
            try:
                tasks.append(Task(key))
            except ValueError:
                raise ValidationError(
                    f"unknown task {name!r} (expected one of {sorted(TASK_ALIASES)})"
                ) from None
    if not tasks:
        raise ValidationError("at least one task is required")
    return tasks


@dataclass
class TrainerSection:
    max_steps: int
    dim: int = 64
    n_layers: int = 2
    n_heads: int = 2
    context: int = 256
    learning_rate: float = 1e-3
    batch_size: int = 32
    eval_interval: int = 50
    loss_on_prompt: bool = False


@dataclass
class RunConfig:
    seed: int
    corpus_src: Path
    corpus_tgt: Path
    src_lang: str
    tgt_lang: str
    trainer: TrainerSection
    train_fraction: float = 0.9
    tasks: list[Task] = field(default_factory=lambda: [Task.DENOISE_WORD, Task.DENOISE_SPAN, Task.TRANSLATE])
    direction: Direction = Direction.PIVOT_TO_NEW
    templates: Path | None = None
    replay_old_data: Path | None = None
    replay_size: int = 0
    eval_data: Path | None = None
    eval_templates: Path | None = None
    eval_verbalizers: Path | None = None
    version: str = CONFIG_VERSION

    def validate(self) -> None:
        for label, path in (
            ("corpus.src", self.corpus_src),
            ("corpus.tgt", self.corpus_tgt),
            ("generate.templates", self.templates),
            ("replay.old_data", self.replay_old_data),
            ("eval.data", self.eval_data),
            ("eval.templates", self.eval_templates),
            ("eval.verbalizers", self.eval_verbalizers),
        ):
            if path is not None and not Path(path).is_file():
                raise ValidationError(f"{label}: file not found: {path}")
        if self.replay_size < 0:
            raise ValidationError("replay.size must be >= 0")
        if self.replay_size > 0 and self.replay_old_data is None:
            raise ValidationError("replay.size > 0 requires replay.old_data")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("split.train_fraction must be in (0, 1)")


def load_run_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaViolation(f"{path}: cannot parse config ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaViolation(f"{path}: config must be a JSON object")
    if "seed" not in doc:
        raise ValidationError(f"{path}: 'seed' must be explicit (no wall-clock defaults)")

    base = Path(path).parent

    def resolve(section: dict, key: str) -> Path | None:
        value = section.get(key)
        return (base / value) if value else None

    try:
        corpus = doc["corpus"]
        gen = doc.get("generate", {})
        replay = doc.get("replay", {})
        trainer_doc = dict(doc["trainer"])
        eval_doc = doc.get("eval") or {}
        cfg = RunConfig(
            seed=int(doc["seed"]),
            corpus_src=base / corpus["src"],
            corpus_tgt=base / corpus["tgt"],
            src_lang=corpus["src_lang"],
            tgt_lang=corpus["tgt_lang"],
            train_fraction=float(doc.get("split", {}).get("train_fraction", 0.9)),
            tasks=parse_tasks(gen.get("tasks", ["word", "span", "mt"])),
            direction=Direction(gen.get("direction", "pivot2new")),
            templates=resolve(gen, "templates"),
            replay_old_data=resolve(replay, "old_data"),
            replay_size=int(replay.get("size", 0)),
            trainer=TrainerSection(**trainer_doc),
            eval_data=resolve(eval_doc, "data"),
            eval_templates=resolve(eval_doc, "templates"),
            eval_verbalizers=resolve(eval_doc, "verbalizers"),
            version=str(doc.get("version", CONFIG_VERSION)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"{path}: bad config: {exc!r}") from exc
    cfg.validate()
    return cfg
