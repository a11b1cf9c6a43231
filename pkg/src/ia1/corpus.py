"""Parallel corpus ingestion and splitting.

Files follow the one-sentence-per-line convention with alignment by line
index; blank lines are hard errors because silently skipping them would
desynchronize the alignment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyCorpus,
    EmptyLine,
    InvalidEncoding,
    LineCountMismatch,
    TooFewPairs,
    ValidationError,
)

_LANG_RE = re.compile(r"^[a-z]{3}$")


def language_tag(code: str) -> str:
    """Validate a 3-letter lowercase language code and return it unchanged."""
    if not isinstance(code, str) or not _LANG_RE.match(code):
        raise ValidationError(f"language tag must be 3 ASCII lowercase letters, got {code!r}")
    return code


@dataclass(frozen=True)
class ParallelPair:
    src_text: str
    tgt_text: str
    pair_id: int


@dataclass(frozen=True)
class ParallelCorpus:
    src_lang: str
    tgt_lang: str
    pairs: tuple[ParallelPair, ...]

    def __len__(self) -> int:
        return len(self.pairs)


def _read_lines(path: str | Path) -> list[str]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidEncoding(f"{path} is not valid UTF-8: {exc}") from exc
    # LF or CRLF both accepted; a single trailing newline does not add a line.
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line.rstrip("\r").strip() for line in lines]


def load_parallel(
    src_path: str | Path,
    tgt_path: str | Path,
    src_lang: str,
    tgt_lang: str,
) -> ParallelCorpus:
    """Load index-aligned sentence files into a corpus.

    Raises LineCountMismatch if the files differ in length, EmptyLine if
    either side is blank at some index, and EmptyCorpus for empty files.
    """
    src_lang = language_tag(src_lang)
    tgt_lang = language_tag(tgt_lang)
    if src_lang == tgt_lang:
        raise ValidationError(f"source and target language are both {src_lang!r}")

    src_lines = _read_lines(src_path)
    tgt_lines = _read_lines(tgt_path)
    if len(src_lines) != len(tgt_lines):
        raise LineCountMismatch(
            f"{src_path} has {len(src_lines)} lines but {tgt_path} has {len(tgt_lines)}"
        )
    if not src_lines:
        raise EmptyCorpus(f"{src_path} and {tgt_path} contain no sentences")

    pairs = []
    for i, (src, tgt) in enumerate(zip(src_lines, tgt_lines)):
        if not src:
            raise EmptyLine(f"{src_path}: blank line at index {i}")
        if not tgt:
            raise EmptyLine(f"{tgt_path}: blank line at index {i}")
        pairs.append(ParallelPair(src, tgt, i))
    return ParallelCorpus(src_lang, tgt_lang, tuple(pairs))


def corpus_from_texts(
    src_texts: list[str], tgt_texts: list[str], src_lang: str, tgt_lang: str
) -> ParallelCorpus:
    """Build a corpus directly from in-memory sentence lists (same contracts as load_parallel)."""
    src_lang = language_tag(src_lang)
    tgt_lang = language_tag(tgt_lang)
    if src_lang == tgt_lang:
        raise ValidationError(f"source and target language are both {src_lang!r}")
    if len(src_texts) != len(tgt_texts):
        raise LineCountMismatch(f"{len(src_texts)} source texts vs {len(tgt_texts)} target texts")
    if not src_texts:
        raise EmptyCorpus("no sentences given")
    pairs = []
    for i, (src, tgt) in enumerate(zip(src_texts, tgt_texts)):
        src, tgt = src.strip(), tgt.strip()
        if not src or not tgt:
            raise EmptyLine(f"blank text at index {i}")
        if "\n" in src or "\n" in tgt:
            raise ValidationError(f"text at index {i} contains a newline")
        pairs.append(ParallelPair(src, tgt, i))
    return ParallelCorpus(src_lang, tgt_lang, tuple(pairs))


def split_corpus(
    corpus: ParallelCorpus, train_fraction: float, seed: int
) -> tuple[ParallelCorpus, ParallelCorpus]:
    """Disjoint train/validation split, deterministic for a fixed seed.

    Both sides are guaranteed non-empty; pair ids are reassigned contiguously
    per split while the original relative order of pairs is preserved.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(corpus.pairs)
    if n < 2:
        raise TooFewPairs(f"need at least 2 pairs to split, got {n}")

    n_train = min(max(int(n * train_fraction), 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = sorted(perm[:n_train].tolist())
    val_idx = sorted(perm[n_train:].tolist())

    def rebuild(indices: list[int]) -> tuple[ParallelPair, ...]:
        return tuple(
            ParallelPair(corpus.pairs[src].src_text, corpus.pairs[src].tgt_text, new_id)
            for new_id, src in enumerate(indices)
        )

    train = ParallelCorpus(corpus.src_lang, corpus.tgt_lang, rebuild(train_idx))
    val = ParallelCorpus(corpus.src_lang, corpus.tgt_lang, rebuild(val_idx))
    return train, val
