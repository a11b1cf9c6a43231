"""Word- and span-level sentence perturbation.

A perturbation removes one contiguous run of tokens and substitutes a single
"_____" placeholder. Tokenization is plain whitespace splitting; punctuation
stays attached to its token. Every perturbation is invertible via
``reconstruct``, which the property tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptyText, MalformedPerturbed, TooShort, UnmaskableSentence, ValidationError

PLACEHOLDER = "_____"


class Granularity(str, Enum):
    WORD = "word"
    SPAN = "span"


def normalize(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return " ".join(text.split())


@dataclass(frozen=True)
class TokenizedSentence:
    tokens: tuple[str, ...]
    original: str

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str) -> TokenizedSentence:
    """Split into maximal runs of non-whitespace characters."""
    tokens = tuple(text.split())
    if not tokens:
        raise EmptyText("cannot tokenize an empty or whitespace-only string")
    return TokenizedSentence(tokens, text)


@dataclass(frozen=True)
class Perturbed:
    masked_text: str
    removed_tokens: tuple[str, ...]
    mask_start: int
    mask_len: int
    granularity: Granularity


def _apply_mask(tokens: tuple[str, ...], start: int, length: int, granularity: Granularity) -> Perturbed:
    # A sentence that already contains the placeholder cannot yield a
    # well-formed Perturbed (the single-placeholder invariant would break).
    if any(PLACEHOLDER in t for t in tokens):
        raise UnmaskableSentence(f"sentence already contains the placeholder {PLACEHOLDER!r}")
    masked = tokens[:start] + (PLACEHOLDER,) + tokens[start + length:]
    return Perturbed(
        masked_text=" ".join(masked),
        removed_tokens=tokens[start:start + length],
        mask_start=start,
        mask_len=length,
        granularity=granularity,
    )


def mask_word(sentence: TokenizedSentence, seed: int) -> Perturbed:
    """Replace one uniformly chosen token with the placeholder."""
    n = len(sentence)
    if n < 2:
        raise TooShort(f"word masking needs >= 2 tokens, got {n}")
    rng = np.random.default_rng(seed)
    start = int(rng.integers(0, n))
    return _apply_mask(sentence.tokens, start, 1, Granularity.WORD)


def mask_span(sentence: TokenizedSentence, seed: int, max_span_fraction: float = 0.6) -> Perturbed:
    """Replace a contiguous token span with a single placeholder.

    The span length is drawn uniformly from [2, max(2, floor(f * n))] and then
    clipped to n - 1, so a span is always strictly longer than one word and
    never consumes the whole sentence. The start index is uniform over the
    valid positions for the drawn length.
    """
    if not 0.0 < max_span_fraction <= 1.0:
        raise ValidationError(f"max_span_fraction must be in (0, 1], got {max_span_fraction}")
    n = len(sentence)
    if n < 3:
        raise TooShort(f"span masking needs >= 3 tokens, got {n}")
    rng = np.random.default_rng(seed)
    hi = max(2, math.floor(max_span_fraction * n))
    length = min(int(rng.integers(2, hi + 1)), n - 1)
    start = int(rng.integers(0, n - length + 1))
    return _apply_mask(sentence.tokens, start, length, Granularity.SPAN)


def reconstruct(p: Perturbed) -> str:
    """Invert a perturbation, returning the normalized original sentence."""
    if p.masked_text.count(PLACEHOLDER) != 1:
        raise MalformedPerturbed(
            f"expected exactly one {PLACEHOLDER!r}, found {p.masked_text.count(PLACEHOLDER)}"
        )
    return p.masked_text.replace(PLACEHOLDER, " ".join(p.removed_tokens))
