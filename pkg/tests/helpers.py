"""Synthetic corpora, datasets, and template sets shared across tests.

Two disjoint alphabets drive the continual-learning experiments: the "old"
task copies strings over one alphabet, the "new" task translates via a fixed
substitution cipher over the other, so any forgetting is visible as loss on
the old alphabet's task.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ia1.corpus import ParallelCorpus, corpus_from_texts
from ia1.instructions import InstructionDataset, InstructionExample
from ia1.templates import PromptTemplate, Task, TemplateSet

OLD_ALPHABET = "abcdefgh"
NEW_ALPHABET = "stuvwxyz"


def random_sentence(rng: np.random.Generator, alphabet: str, n_words: int,
                    word_len: tuple[int, int] = (3, 6)) -> str:
    words = []
    for _ in range(n_words):
        k = int(rng.integers(word_len[0], word_len[1] + 1))
        words.append("".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=k)))
    return " ".join(words)


def cipher(text: str, alphabet: str = NEW_ALPHABET, shift: int = 3) -> str:
    table = {c: alphabet[(i + shift) % len(alphabet)] for i, c in enumerate(alphabet)}
    return "".join(table.get(c, c) for c in text)


def cipher_corpus(n_pairs: int, seed: int, n_words: tuple[int, int] = (3, 5)) -> ParallelCorpus:
    """Parallel corpus whose 'translation' is a fixed substitution cipher."""
    rng = np.random.default_rng(seed)
    src = [
        random_sentence(rng, NEW_ALPHABET, int(rng.integers(n_words[0], n_words[1] + 1)))
        for _ in range(n_pairs)
    ]
    tgt = [cipher(s) for s in src]
    return corpus_from_texts(src, tgt, "zza", "zzb")


def copy_dataset(n: int, seed: int, alphabet: str = OLD_ALPHABET) -> InstructionDataset:
    """Copy-style instructions: the target repeats the prompt payload."""
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        payload = random_sentence(rng, alphabet, int(rng.integers(2, 4)), word_len=(3, 5))
        examples.append(
            InstructionExample(
                example_id=f"copy:{i}",
                task=Task.REPLAY,
                src_lang="zzc",
                tgt_lang="zzc",
                input=payload,
                target=payload,
                template_id="copy",
                pair_id=i,
                seed=i,
            )
        )
    return InstructionDataset(examples, {"kind": "copy", "example_count": n})


def terse_template_set() -> TemplateSet:
    """Minimal-length templates so training sequences stay short."""
    templates = (
        PromptTemplate("t-word", Task.DENOISE_WORD, "zzz", "{src_text} | {masked_text}"),
        PromptTemplate("t-span", Task.DENOISE_SPAN, "zzz", "{src_text} | {masked_text}"),
        PromptTemplate("t-mt", Task.TRANSLATE, "zzz", "{src_text} ="),
        PromptTemplate("t-mono", Task.MONO_DENOISE, "zzz", "{masked_text}"),
    )
    return TemplateSet(templates, {}, digest="terse-v1")


def write_template_file(path: Path, entries: list[dict], names: dict | None = None) -> Path:
    doc = {"language_names": names or {"eng": "English", "ind": "Indonesian"}, "templates": entries}
    path.write_text(json.dumps(doc, ensure_ascii=False, indent=1), encoding="utf-8")
    return path


def word_corpus(n_pairs: int, seed: int, min_words: int = 3, max_words: int = 8) -> ParallelCorpus:
    """Generic multi-token corpus for generation tests (both sides random)."""
    rng = np.random.default_rng(seed)
    src = [
        random_sentence(rng, "klmnopqr", int(rng.integers(min_words, max_words + 1)))
        for _ in range(n_pairs)
    ]
    tgt = [
        random_sentence(rng, NEW_ALPHABET, int(rng.integers(min_words, max_words + 1)))
        for _ in range(n_pairs)
    ]
    return corpus_from_texts(src, tgt, "zza", "zzb")
