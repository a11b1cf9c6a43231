"""Zero-shot multi-prompt classification evaluation.

Predictions use rank classification: every verbalized label surface is scored
by its log-likelihood as a continuation of the rendered prompt (per-character
normalized by default) and the argmax wins, with ties broken by verbalizer
order. Metrics are computed per template and averaged arithmetically across
templates.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import language_tag
from .errors import (
    EmptyData,
    EmptyEvalSet,
    LengthMismatch,
    NoTemplates,
    SchemaViolation,
    UnknownLabel,
    ValidationError,
)
from .model.network import TinyLM, forward_batch
from .model.vocab import BOS_ID, PAD_ID, SEP_ID, Vocab
from .model import kernels
from .seeding import effective_threads
from .templates import PromptTemplate, Task, render_classification_prompt


@dataclass(frozen=True)
class EvalExample:
    text: str
    gold_label: str
    lang: str


class ScoreNorm(str, Enum):
    SUM = "sum"
    PER_TOKEN = "per_token"


class Verbalizer:
    """Ordered label -> surface map; the order defines tie-breaking."""

    def __init__(self, surfaces: Mapping[str, str]):
        if not surfaces:
            raise ValidationError("verbalizer needs at least one label")
        seen = set()
        for label, surface in surfaces.items():
            if not surface:
                raise ValidationError(f"label {label!r} has an empty surface")
            if surface in seen:
                raise ValidationError(f"surface {surface!r} appears twice")
            seen.add(surface)
        self.surfaces = dict(surfaces)
        self.labels = tuple(surfaces)


def load_verbalizers(path: str | Path) -> dict[str, Verbalizer]:
    """Load a prompt-language -> verbalizer map from JSON."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaViolation(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or not doc:
        raise SchemaViolation(f"{path}: expected a lang -> {{label: surface}} object")
    out = {}
    for lang, table in doc.items():
        if not isinstance(table, dict):
            raise SchemaViolation(f"{path}: verbalizer for {lang!r} is not an object")
        out[language_tag(lang)] = Verbalizer(table)
    return out


def default_verbalizer_path() -> Path:
    return Path(__file__).parent / "data" / "verbalizers.json"


def load_eval_set(path: str | Path, label_set: set[str] | None = None) -> list[EvalExample]:
    """Read a TSV eval set with header text<TAB>label<TAB>lang."""
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split("\t") != ["text", "label", "lang"]:
            raise SchemaViolation(f"{path}: header must be 'text\\tlabel\\tlang'", 1)
        for line_no, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise SchemaViolation(f"expected 3 columns, got {len(cols)}", line_no)
            text, label, lang = cols
            if label_set is not None and label not in label_set:
                raise UnknownLabel(f"{path} row {line_no}: label {label!r} not in {sorted(label_set)}")
            examples.append(EvalExample(text, label, language_tag(lang)))
    return examples


def _surface_scores(
    model: TinyLM,
    prompt: str,
    surfaces: Sequence[str],
    vocab: Vocab,
    normalize: ScoreNorm,
) -> np.ndarray:
    """Log-likelihood score of each surface continuing the prompt after SEP."""
    prompt_ids = vocab.encode_text(prompt)
    label_ids = [vocab.encode_text(s) for s in surfaces]
    longest = max(len(l) for l in label_ids)
    # Fit the context by dropping prompt characters from the left (never the label).
    overflow = (2 + len(prompt_ids) + longest) - 1 - model.cfg.context
    if overflow > 0:
        if overflow > len(prompt_ids):
            raise ValidationError(
                f"label surface ({longest} chars) does not fit context {model.cfg.context}"
            )
        prompt_ids = prompt_ids[overflow:]
    prefix = [BOS_ID] + prompt_ids + [SEP_ID]
    rows = len(surfaces)
    t_max = max(len(prefix) + len(l) for l in label_ids)
    ids = np.full((rows, t_max), PAD_ID, dtype=np.int64)
    for i, l in enumerate(label_ids):
        seq = prefix + l
        ids[i, : len(seq)] = seq
    logits, _ = forward_batch(model, ids[:, :-1])
    scores = np.empty(rows, dtype=np.float64)
    p = len(prefix)
    for i, l in enumerate(label_ids):
        nll = kernels.nll_rows(
            np.ascontiguousarray(logits[i, p - 1 : p - 1 + len(l)]),
            np.asarray(l, dtype=np.int64),
        )
        total = -float(nll.sum())
        scores[i] = total / len(l) if normalize == ScoreNorm.PER_TOKEN else total
    return scores


def score_label(
    model: TinyLM,
    prompt: str,
    label_surface: str,
    vocab: Vocab,
    normalize: ScoreNorm = ScoreNorm.PER_TOKEN,
) -> float:
    """Log-likelihood of one label surface continuing the prompt."""
    if not label_surface:
        raise ValidationError("label surface must be non-empty")
    return float(_surface_scores(model, prompt, [label_surface], vocab, normalize)[0])


def classify(
    model: TinyLM,
    ex: EvalExample,
    tpl: PromptTemplate,
    verbalizer: Verbalizer,
    vocab: Vocab,
    language_names: Mapping[str, str] | None = None,
    normalize: ScoreNorm = ScoreNorm.PER_TOKEN,
) -> str:
    """Argmax label under rank classification; first-in-order label wins ties."""
    prompt = render_classification_prompt(ex.text, tpl, ex.lang, language_names or {})
    surfaces = [verbalizer.surfaces[label] for label in verbalizer.labels]
    scores = _surface_scores(model, prompt, surfaces, vocab, normalize)
    return verbalizer.labels[int(np.argmax(scores))]


def accuracy(preds: Sequence[str], golds: Sequence[str]) -> float:
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} golds")
    if not golds:
        raise EmptyData("cannot compute accuracy of zero predictions")
    return sum(p == g for p, g in zip(preds, golds)) / len(golds)


def weighted_f1(preds: Sequence[str], golds: Sequence[str], label_set: Sequence[str]) -> float:
    """Support-weighted mean of per-class F1; F1 = 0 where precision + recall = 0."""
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} golds")
    if not golds:
        raise EmptyData("cannot compute weighted F1 of zero predictions")
    labels = list(dict.fromkeys(label_set))
    index = {label: i for i, label in enumerate(labels)}
    for value in (*preds, *golds):
        if value not in index:
            raise UnknownLabel(f"value {value!r} not in label set {labels}")

    k = len(labels)
    confusion = np.zeros((k, k), dtype=np.int64)  # [gold, pred]
    gold_idx = np.fromiter((index[g] for g in golds), dtype=np.int64, count=len(golds))
    pred_idx = np.fromiter((index[p] for p in preds), dtype=np.int64, count=len(preds))
    np.add.at(confusion, (gold_idx, pred_idx), 1)

    tp = np.diag(confusion).astype(np.float64)
    support = confusion.sum(axis=1).astype(np.float64)
    predicted = confusion.sum(axis=0).astype(np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
    return float((support / len(golds) * f1).sum())


@dataclass
class EvalMetrics:
    per_template: dict[str, dict[str, float]]
    averaged: dict[str, float]
    per_language: dict[str, dict[str, float]]

    def to_json(self) -> str:
        return json.dumps(
            {
                "per_template": self.per_template,
                "averaged": self.averaged,
                "per_language": self.per_language,
            },
            ensure_ascii=False,
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "EvalMetrics":
        doc = json.loads(text)
        try:
            return cls(doc["per_template"], doc["averaged"], doc["per_language"])
        except KeyError as exc:
            raise SchemaViolation(f"metrics JSON lacks field {exc}") from exc

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scope", "name", "accuracy", "weighted_f1"])
            for tid in sorted(self.per_template):
                m = self.per_template[tid]
                writer.writerow(["template", tid, repr(m["accuracy"]), repr(m["weighted_f1"])])
            for lang in sorted(self.per_language):
                m = self.per_language[lang]
                writer.writerow(["language", lang, repr(m["accuracy"]), repr(m["weighted_f1"])])
            writer.writerow(
                ["averaged", "all", repr(self.averaged["accuracy"]), repr(self.averaged["weighted_f1"])]
            )


def evaluate(
    model: TinyLM,
    eval_set: Sequence[EvalExample],
    templates: Sequence[PromptTemplate],
    verbalizers: Mapping[str, Verbalizer],
    vocab: Vocab,
    language_names: Mapping[str, str] | None = None,
    normalize: ScoreNorm = ScoreNorm.PER_TOKEN,
) -> EvalMetrics:
    """Per-template accuracy/weighted-F1 plus their mean and a per-language breakdown."""
    templates = [t for t in templates if t.task == Task.CLASSIFY]
    if not templates:
        raise NoTemplates("no classification templates supplied")
    if not eval_set:
        raise EmptyEvalSet("evaluation set is empty")
    for tpl in templates:
        if tpl.prompt_lang not in verbalizers:
            raise ValidationError(f"no verbalizer for prompt language {tpl.prompt_lang!r}")

    label_sets = {tuple(v.labels) for v in verbalizers.values()}
    if len(label_sets) != 1:
        raise ValidationError("verbalizers disagree on the label set or its order")
    labels = list(label_sets.pop())
    for i, ex in enumerate(eval_set):
        if ex.gold_label not in labels:
            raise UnknownLabel(f"example {i}: gold label {ex.gold_label!r} not in {labels}")

    golds = [ex.gold_label for ex in eval_set]
    threads = effective_threads()
    per_template: dict[str, dict[str, float]] = {}
    preds_by_template: dict[str, list[str]] = {}
    for tpl in templates:
        verb = verbalizers[tpl.prompt_lang]

        def predict(ex: EvalExample) -> str:
            return classify(model, ex, tpl, verb, vocab, language_names, normalize)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                preds = list(pool.map(predict, eval_set))
        else:
            preds = [predict(ex) for ex in eval_set]
        preds_by_template[tpl.template_id] = preds
        per_template[tpl.template_id] = {
            "accuracy": accuracy(preds, golds),
            "weighted_f1": weighted_f1(preds, golds, labels),
        }

    averaged = {
        metric: float(np.mean([m[metric] for m in per_template.values()]))
        for metric in ("accuracy", "weighted_f1")
    }

    per_language: dict[str, dict[str, float]] = {}
    for lang in sorted({ex.lang for ex in eval_set}):
        rows = [i for i, ex in enumerate(eval_set) if ex.lang == lang]
        accs, f1s = [], []
        for tpl in templates:
            preds = preds_by_template[tpl.template_id]
            sub_preds = [preds[i] for i in rows]
            sub_golds = [golds[i] for i in rows]
            accs.append(accuracy(sub_preds, sub_golds))
            f1s.append(weighted_f1(sub_preds, sub_golds, labels))
        per_language[lang] = {
            "accuracy": float(np.mean(accs)),
            "weighted_f1": float(np.mean(f1s)),
        }

    return EvalMetrics(per_template, averaged, per_language)
