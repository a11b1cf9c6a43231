"""Prompt templates and rendering.

A template is a pattern string with named placeholders; which placeholders
are required/allowed depends on the task. Rendering substitutes the known
placeholders literally (no str.format, so braces inside sentence text are
inert). Language display names come from the tag -> name map shipped in the
same template file.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping

from .corpus import language_tag
from .errors import (
    DuplicateTemplateId,
    GranularityMismatch,
    MissingPlaceholder,
    NoTemplates,
    SchemaViolation,
    TaskMismatch,
)
from .perturb import Granularity, Perturbed


class Task(str, Enum):
    """Instruction task taxonomy (values are the on-disk task tags)."""

    DENOISE_WORD = "denoise_word"
    DENOISE_SPAN = "denoise_span"
    TRANSLATE = "translate"
    MONO_DENOISE = "mono_denoise"
    REPLAY = "replay"
    CLASSIFY = "classify"


# CLI-facing short names.
TASK_ALIASES = {
    "word": Task.DENOISE_WORD,
    "span": Task.DENOISE_SPAN,
    "mt": Task.TRANSLATE,
    "mono": Task.MONO_DENOISE,
}

TASK_FOR_GRANULARITY = {
    Granularity.WORD: Task.DENOISE_WORD,
    Granularity.SPAN: Task.DENOISE_SPAN,
}

REQUIRED_PLACEHOLDERS: dict[Task, frozenset[str]] = {
    Task.DENOISE_WORD: frozenset({"src_text", "masked_text"}),
    Task.DENOISE_SPAN: frozenset({"src_text", "masked_text"}),
    Task.TRANSLATE: frozenset({"src_text"}),
    Task.MONO_DENOISE: frozenset({"masked_text"}),
    Task.CLASSIFY: frozenset({"src_text"}),
}

ALLOWED_PLACEHOLDERS: dict[Task, frozenset[str]] = {
    Task.DENOISE_WORD: frozenset({"src_text", "masked_text", "src_lang_name", "tgt_lang_name"}),
    Task.DENOISE_SPAN: frozenset({"src_text", "masked_text", "src_lang_name", "tgt_lang_name"}),
    Task.TRANSLATE: frozenset({"src_text", "src_lang_name", "tgt_lang_name"}),
    Task.MONO_DENOISE: frozenset({"masked_text", "tgt_lang_name"}),
    Task.CLASSIFY: frozenset({"src_text", "src_lang_name"}),
}

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    task: Task
    prompt_lang: str
    pattern: str
    origin: str = "invented"


@dataclass(frozen=True)
class TemplateSet:
    templates: tuple[PromptTemplate, ...]
    language_names: Mapping[str, str]
    digest: str

    def by_task(self, task: Task) -> tuple[PromptTemplate, ...]:
        return tuple(t for t in self.templates if t.task == task)

    def display_name(self, tag: str) -> str:
        return self.language_names.get(tag, tag)


def validate_template(tpl: PromptTemplate) -> None:
    found = set(_PLACEHOLDER_RE.findall(tpl.pattern))
    if tpl.task not in REQUIRED_PLACEHOLDERS:
        raise SchemaViolation(f"template {tpl.template_id!r}: task {tpl.task} takes no prompt template")
    missing = REQUIRED_PLACEHOLDERS[tpl.task] - found
    if missing:
        raise MissingPlaceholder(
            f"template {tpl.template_id!r} ({tpl.task.value}) lacks {{{sorted(missing)[0]}}}"
        )
    unknown = found - ALLOWED_PLACEHOLDERS[tpl.task]
    if unknown:
        raise SchemaViolation(
            f"template {tpl.template_id!r} uses unsupported placeholder {{{sorted(unknown)[0]}}}"
        )


def load_templates(path: str | Path) -> TemplateSet:
    """Load and validate a template file (JSON)."""
    raw = Path(path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaViolation(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "templates" not in doc:
        raise SchemaViolation(f"{path}: expected an object with a 'templates' list")

    names = doc.get("language_names", {})
    if not isinstance(names, dict):
        raise SchemaViolation(f"{path}: 'language_names' must be a tag -> name object")

    templates: list[PromptTemplate] = []
    seen_ids: set[str] = set()
    for i, entry in enumerate(doc["templates"]):
        if not isinstance(entry, dict):
            raise SchemaViolation(f"{path}: template #{i} is not an object")
        try:
            tpl = PromptTemplate(
                template_id=entry["template_id"],
                task=Task(entry["task"]),
                prompt_lang=language_tag(entry["prompt_lang"]),
                pattern=entry["pattern"],
                origin=entry.get("origin", "invented"),
            )
        except KeyError as exc:
            raise SchemaViolation(f"{path}: template #{i} lacks field {exc}") from exc
        except ValueError as exc:
            raise SchemaViolation(f"{path}: template #{i}: {exc}") from exc
        if tpl.template_id in seen_ids:
            raise DuplicateTemplateId(f"{path}: duplicate template id {tpl.template_id!r}")
        seen_ids.add(tpl.template_id)
        validate_template(tpl)
        templates.append(tpl)
    if not templates:
        raise NoTemplates(f"{path}: no templates defined")
    return TemplateSet(tuple(templates), dict(names), digest)


def default_template_path() -> Path:
    return Path(__file__).parent / "data" / "alignment_templates.json"


def default_eval_template_path() -> Path:
    return Path(__file__).parent / "data" / "eval_templates.json"


def _substitute(pattern: str, values: Mapping[str, str]) -> str:
    return _PLACEHOLDER_RE.sub(lambda m: values.get(m.group(1), m.group(0)), pattern)


def render_denoising_prompt(
    src_text: str,
    perturbed: Perturbed,
    tpl: PromptTemplate,
    src_lang: str,
    tgt_lang: str,
    language_names: Mapping[str, str],
) -> str:
    """Render a conditional-denoising prompt pairing a source sentence with a masked target."""
    if tpl.task not in (Task.DENOISE_WORD, Task.DENOISE_SPAN):
        raise TaskMismatch(f"template {tpl.template_id!r} is for {tpl.task.value}, not denoising")
    if TASK_FOR_GRANULARITY[perturbed.granularity] != tpl.task:
        raise GranularityMismatch(
            f"{perturbed.granularity.value}-level perturbation with a {tpl.task.value} template"
        )
    return _substitute(
        tpl.pattern,
        {
            "src_text": src_text,
            "masked_text": perturbed.masked_text,
            "src_lang_name": language_names.get(src_lang, src_lang),
            "tgt_lang_name": language_names.get(tgt_lang, tgt_lang),
        },
    )


def render_mono_denoising_prompt(
    perturbed: Perturbed,
    tpl: PromptTemplate,
    tgt_lang: str,
    language_names: Mapping[str, str],
) -> str:
    """Render a source-free denoising prompt (masked target sentence only)."""
    if tpl.task != Task.MONO_DENOISE:
        raise TaskMismatch(f"template {tpl.template_id!r} is for {tpl.task.value}, not mono denoising")
    return _substitute(
        tpl.pattern,
        {
            "masked_text": perturbed.masked_text,
            "tgt_lang_name": language_names.get(tgt_lang, tgt_lang),
        },
    )


def render_translation_prompt(
    src_text: str,
    tpl: PromptTemplate,
    src_lang: str,
    tgt_lang: str,
    language_names: Mapping[str, str],
) -> str:
    """Render a translation prompt; the source sentence appears verbatim."""
    if tpl.task != Task.TRANSLATE:
        raise TaskMismatch(f"template {tpl.template_id!r} is for {tpl.task.value}, not translation")
    return _substitute(
        tpl.pattern,
        {
            "src_text": src_text,
            "src_lang_name": language_names.get(src_lang, src_lang),
            "tgt_lang_name": language_names.get(tgt_lang, tgt_lang),
        },
    )


def render_classification_prompt(
    text: str,
    tpl: PromptTemplate,
    lang: str,
    language_names: Mapping[str, str],
) -> str:
    """Render a zero-shot classification prompt around the example text."""
    if tpl.task != Task.CLASSIFY:
        raise TaskMismatch(f"template {tpl.template_id!r} is for {tpl.task.value}, not classification")
    return _substitute(
        tpl.pattern,
        {
            "src_text": text,
            "src_lang_name": language_names.get(lang, lang),
        },
    )
