"""Command-line entry point.

Subcommands: generate, schedule, train, eval, pipeline, report. Exit codes:
0 success, 2 validation failure, 3 runtime failure. --seed overrides any
config seed; IA1_THREADS caps intra-stage parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_run_config, parse_tasks
from .corpus import load_parallel
from .errors import Ia1Error, RuntimeFailure, ValidationError
from .evaluator import (
    default_verbalizer_path,
    evaluate,
    load_eval_set,
    load_verbalizers,
)
from .instructions import Direction, generate_dataset, read_dataset, write_dataset
from .model.checkpoint import load_model, save_model
from .model.network import ModelConfig, TinyLM
from .model.train import TrainConfig, train
from .model.vocab import build_vocab
from .pipeline import run_pipeline
from .replay import (
    ReplayPool,
    plan_from_batches,
    read_batch_plan,
    resolve_batch_plan,
    sample_replay,
    schedule_epoch,
    write_batch_plan,
)
from .report import write_delta_report, write_smoothed_curves
from .templates import default_eval_template_path, default_template_path, load_templates


def _cmd_generate(args: argparse.Namespace) -> int:
    corpus = load_parallel(args.src, args.tgt, args.src_lang, args.tgt_lang)
    templates = load_templates(args.templates or default_template_path())
    tasks = parse_tasks(args.tasks.split(","))
    ds = generate_dataset(corpus, tasks, templates, args.seed, Direction(args.direction))
    write_dataset(ds, args.out)
    print(f"wrote {len(ds)} examples to {args.out} "
          f"({ds.manifest['total_skipped']} skipped)")
    return 0


def _cmd_schedule(args: argparse.Namespace) -> int:
    new_ds = read_dataset(args.new)
    if args.old:
        old_ds = read_dataset(args.old)
        pool = sample_replay(old_ds, args.replay_size, args.seed)
    else:
        if args.replay_size > 0:
            raise ValidationError("--replay-size > 0 requires --old")
        pool = ReplayPool([], 0, "")
    batches = schedule_epoch(pool, new_ds, args.batch_size, args.seed)
    meta = {
        "batch_size": args.batch_size,
        "replay_size": pool.r,
        "seed": args.seed,
        "new_path": str(args.new),
        "old_path": str(args.old) if args.old else None,
    }
    write_batch_plan(plan_from_batches(batches), args.out, meta)
    print(f"wrote {len(batches)} batches to {args.out}")
    return 0


def _load_trainer_config(path: str, seed_override: int | None) -> tuple[TrainConfig, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "seed" not in doc and seed_override is None:
        raise ValidationError(f"{path}: 'seed' must be explicit")
    model_keys = {"dim", "n_layers", "n_heads", "context"}
    model_doc = {k: v for k, v in doc.items() if k in model_keys}
    train_doc = {k: v for k, v in doc.items() if k not in model_keys}
    if seed_override is not None:
        train_doc["seed"] = seed_override
    try:
        return TrainConfig(**train_doc), model_doc
    except TypeError as exc:
        raise ValidationError(f"{path}: bad trainer config: {exc}") from exc


def _cmd_train(args: argparse.Namespace) -> int:
    meta, plan = read_batch_plan(args.schedule)
    new_path = args.data or meta.get("new_path")
    if not new_path:
        raise ValidationError("schedule has no new_path; pass --data")
    new_ds = read_dataset(new_path)
    old_ds = None
    old_path = args.old_data or meta.get("old_path")
    if any(src == "old" for b in plan for src, _ in b.items):
        if not old_path:
            raise ValidationError("schedule references old examples; pass --old-data")
        old_ds = read_dataset(old_path)
    schedule = resolve_batch_plan(plan, new_ds, old_ds)

    cfg, model_doc = _load_trainer_config(args.config, args.seed)
    val_sets = {}
    if args.val:
        for spec in args.val.split(","):
            val_path = Path(spec)
            val_sets[val_path.stem] = read_dataset(val_path)

    if args.init_model:
        model = load_model(args.init_model)
        vocab = model.vocab
    else:
        vocab_sources = [new_ds] + ([old_ds] if old_ds else []) + list(val_sets.values())
        vocab = build_vocab(vocab_sources)
        model = TinyLM.init(
            ModelConfig(vocab_size=vocab.size, **model_doc), cfg.seed, vocab=vocab
        )
    model, curve = train(model, schedule, cfg, val_sets, vocab)
    save_model(model, args.out_model)
    if args.curves:
        curve.write_csv(args.curves)
    print(f"trained {min(cfg.max_steps, len(schedule))} steps; "
          f"final train loss {curve.train[-1][1]:.4f}; model -> {args.out_model}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    templates = load_templates(args.templates or default_eval_template_path())
    verbalizers = load_verbalizers(args.verbalizers or default_verbalizer_path())
    label_set = set(next(iter(verbalizers.values())).labels)
    eval_set = load_eval_set(args.data, label_set)
    metrics = evaluate(
        model, eval_set, templates.templates, verbalizers, model.vocab,
        templates.language_names,
    )
    out = Path(args.out)
    out.write_text(metrics.to_json() + "\n", encoding="utf-8")
    if args.csv:
        metrics.write_csv(args.csv)
    print(f"averaged accuracy {metrics.averaged['accuracy']:.4f}, "
          f"weighted F1 {metrics.averaged['weighted_f1']:.4f} -> {out}")
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    config_bytes = Path(args.config).read_bytes()
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    manifest = run_pipeline(cfg, args.workdir, config_bytes)
    print(f"pipeline complete; manifest -> {Path(args.workdir) / 'manifest.json'}")
    for stage in manifest["stages"]:
        print(f"  stage {stage}: ok")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    wrote = []
    if args.curves:
        out = outdir / "curves_smoothed.csv"
        write_smoothed_curves(args.curves, out, window=args.window)
        wrote.append(out)
    if args.metrics:
        if not args.baseline:
            raise ValidationError("--metrics requires --baseline for the delta report")
        out = outdir / "delta_per_language.csv"
        write_delta_report(args.metrics, args.baseline, out)
        wrote.append(out)
    if not wrote:
        raise ValidationError("nothing to report: pass --curves and/or --metrics")
    for path in wrote:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ia1",
        description="Cross-lingual alignment instruction pipeline: data generation, "
                    "replay-interleaved tuning, and multi-prompt evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="compile a parallel corpus into an instruction dataset")
    p.add_argument("--src", required=True, help="source-language sentence file (one per line)")
    p.add_argument("--tgt", required=True, help="target-language sentence file (one per line)")
    p.add_argument("--src-lang", required=True)
    p.add_argument("--tgt-lang", required=True)
    p.add_argument("--tasks", default="word,span,mt", help="comma list: word,span,mt,mono")
    p.add_argument("--direction", default="pivot2new", choices=[d.value for d in Direction])
    p.add_argument("--templates", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("schedule", help="materialize an interleaved batch plan")
    p.add_argument("--new", required=True, help="new instruction dataset (jsonl)")
    p.add_argument("--old", default=None, help="past instruction dataset (jsonl)")
    p.add_argument("--replay-size", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("train", help="train the tiny model over a batch plan")
    p.add_argument("--schedule", required=True)
    p.add_argument("--config", required=True, help="trainer config JSON")
    p.add_argument("--data", default=None, help="override the plan's new-dataset path")
    p.add_argument("--old-data", default=None, help="override the plan's old-dataset path")
    p.add_argument("--val", default=None, help="comma list of validation dataset files")
    p.add_argument("--init-model", default=None, help="checkpoint to continue from")
    p.add_argument("--out-model", required=True)
    p.add_argument("--curves", default=None, help="loss-curve CSV output")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="multi-prompt zero-shot classification evaluation")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="TSV: text<TAB>label<TAB>lang")
    p.add_argument("--templates", default=None)
    p.add_argument("--verbalizers", default=None)
    p.add_argument("--out", required=True, help="metrics JSON output")
    p.add_argument("--csv", default=None, help="optional metrics CSV output")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("pipeline", help="run generate -> schedule -> train -> eval from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--workdir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("report", help="emit delta-vs-baseline and smoothed-curve CSVs")
    p.add_argument("--curves", default=None)
    p.add_argument("--metrics", default=None)
    p.add_argument("--baseline", default=None)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeFailure as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    except Ia1Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
