"""Desk-scale cross-lingual alignment instruction tuning.

Compiles parallel corpora into alignment-based instruction datasets
(conditional denoising at word/span granularity, translation, and a
monolingual-denoising baseline), schedules replay-interleaved batches for
continual tuning of a tiny built-in character-level language model, and
evaluates zero-shot classification over multiple prompts.
"""

__version__ = "0.1.0"

from .corpus import ParallelCorpus, ParallelPair, load_parallel, split_corpus
from .perturb import (
    PLACEHOLDER,
    Granularity,
    Perturbed,
    TokenizedSentence,
    mask_span,
    mask_word,
    reconstruct,
    tokenize,
)
from .templates import PromptTemplate, Task, TemplateSet, load_templates
from .instructions import (
    Direction,
    InstructionDataset,
    InstructionExample,
    generate_dataset,
    read_dataset,
    write_dataset,
)
from .replay import MixBatch, ReplayPool, sample_replay, schedule_epoch
from .model import ModelConfig, TinyLM, TrainConfig, Vocab, build_vocab, train
from .evaluator import EvalMetrics, Verbalizer, accuracy, classify, evaluate, weighted_f1
