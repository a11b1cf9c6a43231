"""Character vocabulary and example encoding.

Character-level modeling keeps the model tiny and script-agnostic: the
vocabulary is the reserved symbols plus every character present in the
training data, sorted by codepoint for determinism.

An encoded example is BOS + prompt chars + SEP + target chars + EOS, with the
loss mask set on the target and EOS positions only (completion loss). The
``loss_on_prompt`` ablation extends the mask over the prompt and SEP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..errors import EmptyData, ValidationError
from ..instructions import InstructionDataset, InstructionExample

PAD_ID, BOS_ID, EOS_ID, SEP_ID, UNK_ID = 0, 1, 2, 3, 4
RESERVED = ("<pad>", "<bos>", "<eos>", "<sep>", "<unk>")


@dataclass(frozen=True)
class Vocab:
    chars: tuple[str, ...]
    char_to_id: dict[str, int] = field(compare=False)

    @classmethod
    def from_chars(cls, chars: Iterable[str]) -> "Vocab":
        ordered = tuple(sorted(set(chars)))
        lookup = {c: i + len(RESERVED) for i, c in enumerate(ordered)}
        return cls(ordered, lookup)

    @property
    def size(self) -> int:
        return len(RESERVED) + len(self.chars)

    def encode_text(self, text: str) -> list[int]:
        lookup = self.char_to_id
        return [lookup.get(c, UNK_ID) for c in text]

    def decode(self, ids: Sequence[int]) -> str:
        out = []
        for i in ids:
            i = int(i)
            if not 0 <= i < self.size:
                raise ValidationError(f"id {i} out of range for vocab of size {self.size}")
            out.append(RESERVED[i] if i < len(RESERVED) else self.chars[i - len(RESERVED)])
        return "".join(out)


def build_vocab(datasets: list[InstructionDataset]) -> Vocab:
    chars: set[str] = set()
    total = 0
    for ds in datasets:
        for ex in ds.examples:
            total += 1
            chars.update(ex.input)
            chars.update(ex.target)
    if total == 0:
        raise EmptyData("cannot build a vocabulary from zero examples")
    return Vocab.from_chars(chars)


def encode_example(
    ex: InstructionExample, vocab: Vocab, loss_on_prompt: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Encode one example into (ids, loss_mask) arrays of equal length."""
    prompt_ids = vocab.encode_text(ex.input)
    target_ids = vocab.encode_text(ex.target)
    ids = [BOS_ID] + prompt_ids + [SEP_ID] + target_ids + [EOS_ID]
    mask = [0] * (len(prompt_ids) + 2) + [1] * (len(target_ids) + 1)
    if loss_on_prompt:
        # Everything after BOS becomes supervised.
        mask = [0] + [1] * (len(ids) - 1)
    return np.asarray(ids, dtype=np.int64), np.asarray(mask, dtype=np.int64)


def encode_batch(
    examples: Sequence[InstructionExample],
    vocab: Vocab,
    context: int,
    loss_on_prompt: bool = False,
    cache: dict | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Encode, left-truncate prompts to the context window, and right-pad.

    Truncation drops characters from the left of the prompt (never from the
    target); an example whose target alone exceeds the context is an error.
    Returns (ids, mask) of shape (B, T_max).
    """
    encoded = []
    for ex in examples:
        key = (ex.example_id, loss_on_prompt)
        if cache is not None and key in cache:
            ids, mask = cache[key]
        else:
            ids, mask = encode_example(ex, vocab, loss_on_prompt)
            if len(ids) > context:
                overflow = len(ids) - context
                prompt_len = len(ex.input)  # chars between BOS and SEP
                if overflow > prompt_len:
                    raise ValidationError(
                        f"example {ex.example_id!r}: target does not fit the context window "
                        f"({len(ids)} ids, context {context})"
                    )
                keep = np.concatenate(([0], np.arange(1 + overflow, len(ids))))
                ids, mask = ids[keep], mask[keep]
            if cache is not None:
                cache[key] = (ids, mask)
        encoded.append((ids, mask))

    t_max = max(len(ids) for ids, _ in encoded)
    batch_ids = np.full((len(encoded), t_max), PAD_ID, dtype=np.int64)
    batch_mask = np.zeros((len(encoded), t_max), dtype=np.int64)
    for row, (ids, mask) in enumerate(encoded):
        batch_ids[row, : len(ids)] = ids
        batch_mask[row, : len(mask)] = mask
    return batch_ids, batch_mask
