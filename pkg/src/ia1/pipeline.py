"""End-to-end orchestration: generate -> schedule -> train -> eval.

Every stage output is digested into a manifest so a run can be audited and
reproduced from the manifest alone; reruns with the same config produce
identical digests.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .config import RunConfig
from .corpus import load_parallel, split_corpus
from .evaluator import evaluate, load_eval_set, load_verbalizers, default_verbalizer_path
from .instructions import InstructionDataset, generate_dataset, read_dataset, write_dataset
from .model.checkpoint import save_model
from .model.network import ModelConfig, TinyLM
from .model.train import TrainConfig, train
from .model.vocab import build_vocab
from .replay import (
    ReplayPool,
    build_training_schedule,
    plan_from_batches,
    sample_replay,
    write_batch_plan,
)
from .seeding import derive_seed
from .templates import default_eval_template_path, default_template_path, load_templates


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_pipeline(cfg: RunConfig, workdir: str | Path, config_bytes: bytes | None = None) -> dict:
    """Run all stages into workdir and return the manifest (also written there)."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"version": cfg.version, "seed": cfg.seed, "stages": {}}
    if config_bytes is not None:
        manifest["config_digest"] = hashlib.sha256(config_bytes).hexdigest()

    # Stage 1: corpus and instruction datasets.
    corpus = load_parallel(cfg.corpus_src, cfg.corpus_tgt, cfg.src_lang, cfg.tgt_lang)
    train_corpus, val_corpus = split_corpus(corpus, cfg.train_fraction, derive_seed(cfg.seed, "split"))
    templates = load_templates(cfg.templates or default_template_path())
    train_ds = generate_dataset(train_corpus, cfg.tasks, templates, derive_seed(cfg.seed, "gen", "train"), cfg.direction)
    val_ds = generate_dataset(val_corpus, cfg.tasks, templates, derive_seed(cfg.seed, "gen", "val"), cfg.direction)
    train_path, val_path = workdir / "train_dataset.jsonl", workdir / "val_dataset.jsonl"
    write_dataset(train_ds, train_path)
    write_dataset(val_ds, val_path)
    manifest["stages"]["generate"] = {
        "train_dataset": {"path": train_path.name, "sha256": file_digest(train_path),
                          "examples": len(train_ds)},
        "val_dataset": {"path": val_path.name, "sha256": file_digest(val_path),
                        "examples": len(val_ds)},
    }

    # Stage 2: replay pool and batch schedule.
    old_ds: InstructionDataset | None = None
    if cfg.replay_old_data is not None:
        old_ds = read_dataset(cfg.replay_old_data)
        pool = sample_replay(old_ds, cfg.replay_size, derive_seed(cfg.seed, "replay"))
    else:
        pool = ReplayPool([], 0, "")
    schedule = build_training_schedule(
        pool, train_ds, cfg.trainer.batch_size, derive_seed(cfg.seed, "schedule"),
        min_steps=cfg.trainer.max_steps,
    )
    plan_path = workdir / "schedule.jsonl"
    write_batch_plan(
        plan_from_batches(schedule), plan_path,
        meta={
            "batch_size": cfg.trainer.batch_size,
            "replay_size": pool.r,
            "new_path": train_path.name,
            "old_path": str(cfg.replay_old_data) if cfg.replay_old_data else None,
            "seed": derive_seed(cfg.seed, "schedule"),
        },
    )
    manifest["stages"]["schedule"] = {
        "path": plan_path.name, "sha256": file_digest(plan_path), "batches": len(schedule),
    }

    # Stage 3: training.
    vocab_sources = [train_ds, val_ds] + ([old_ds] if old_ds is not None else [])
    vocab = build_vocab(vocab_sources)
    model_cfg = ModelConfig(
        vocab_size=vocab.size, dim=cfg.trainer.dim, n_layers=cfg.trainer.n_layers,
        n_heads=cfg.trainer.n_heads, context=cfg.trainer.context,
    )
    model = TinyLM.init(model_cfg, derive_seed(cfg.seed, "init"), vocab=vocab)
    train_cfg = TrainConfig(
        max_steps=cfg.trainer.max_steps, learning_rate=cfg.trainer.learning_rate,
        batch_size=cfg.trainer.batch_size, seed=cfg.seed,
        eval_interval=cfg.trainer.eval_interval, loss_on_prompt=cfg.trainer.loss_on_prompt,
    )
    val_sets = {"val": val_ds}
    model, curve = train(model, schedule, train_cfg, val_sets, vocab)
    model_path, curves_path = workdir / "model.ia1m", workdir / "curves.csv"
    save_model(model, model_path)
    curve.write_csv(curves_path)
    manifest["stages"]["train"] = {
        "model": {"path": model_path.name, "sha256": file_digest(model_path)},
        "curves": {"path": curves_path.name, "sha256": file_digest(curves_path)},
        "final_train_loss": curve.train[-1][1] if curve.train else None,
    }

    # Stage 4: evaluation (optional).
    if cfg.eval_data is not None:
        eval_templates = load_templates(cfg.eval_templates or default_eval_template_path())
        verbalizers = load_verbalizers(cfg.eval_verbalizers or default_verbalizer_path())
        label_set = set(next(iter(verbalizers.values())).labels)
        eval_set = load_eval_set(cfg.eval_data, label_set)
        metrics = evaluate(
            model, eval_set, eval_templates.templates, verbalizers, vocab,
            eval_templates.language_names,
        )
        metrics_path = workdir / "metrics.json"
        metrics_path.write_text(metrics.to_json() + "\n", encoding="utf-8")
        metrics_csv = workdir / "metrics.csv"
        metrics.write_csv(metrics_csv)
        manifest["stages"]["eval"] = {
            "metrics": {"path": metrics_path.name, "sha256": file_digest(metrics_path)},
            "metrics_csv": {"path": metrics_csv.name, "sha256": file_digest(metrics_csv)},
            "averaged": metrics.averaged,
        }

    manifest_path = workdir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return manifest
