"""Single-file binary checkpoints.

Layout: magic "IA1M" | u32 format version | u32 header length | header JSON
(UTF-8) | raw parameter blocks. Blocks are row-major little-endian float32 in
the canonical parameter order, so read(write(model)) reproduces a float32
model bitwise. The header carries the dims and the vocabulary.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .network import ModelConfig, TinyLM, param_shapes
from .vocab import Vocab

MAGIC = b"IA1M"
FORMAT_VERSION = 1


def save_model(model: TinyLM, path: str | Path) -> None:
    if model.vocab is None:
        raise ValidationError("model has no vocabulary attached; cannot checkpoint")
    cfg = model.cfg
    header = {
        "format": FORMAT_VERSION,
        "config": {
            "vocab_size": cfg.vocab_size,
            "dim": cfg.dim,
            "n_layers": cfg.n_layers,
            "n_heads": cfg.n_heads,
            "context": cfg.context,
        },
        "vocab_chars": "".join(model.vocab.chars),
        "param_order": [name for name, _ in param_shapes(cfg)],
    }
    blob = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        for name, _ in param_shapes(cfg):
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f4").tobytes(order="C"))


def load_model(path: str | Path) -> TinyLM:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise ValidationError(f"{path}: not a model checkpoint (bad magic)")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint format {version}")
    try:
        header = json.loads(raw[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: corrupt checkpoint header: {exc}") from exc

    cfg = ModelConfig(**header["config"])
    vocab = Vocab.from_chars(header["vocab_chars"])
    if vocab.size != cfg.vocab_size:
        raise ValidationError(
            f"{path}: vocab has {vocab.size} symbols but config says {cfg.vocab_size}"
        )

    offset = 12 + header_len
    params: dict[str, np.ndarray] = {}
    expected_order = [name for name, _ in param_shapes(cfg)]
    if header.get("param_order") != expected_order:
        raise ValidationError(f"{path}: parameter order does not match the model layout")
    for name, shape in param_shapes(cfg):
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(raw):
            raise ValidationError(f"{path}: truncated checkpoint (while reading {name})")
        params[name] = np.frombuffer(raw[offset:end], dtype="<f4").reshape(shape).copy()
        offset = end
    if offset != len(raw):
        raise ValidationError(f"{path}: {len(raw) - offset} trailing bytes after parameters")
    return TinyLM(cfg, params, vocab)
