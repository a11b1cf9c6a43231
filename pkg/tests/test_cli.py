import json
import os
from pathlib import Path

import numpy as np
import pytest

from ia1.cli import main
from ia1.instructions import read_dataset
from ia1.model.checkpoint import load_model
from ia1.model.train import LossCurve
from ia1.replay import read_batch_plan

from helpers import NEW_ALPHABET, cipher, random_sentence


@pytest.fixture()
def corpus_files(tmp_path):
    rng = np.random.default_rng(7)
    src = [random_sentence(rng, NEW_ALPHABET, int(rng.integers(3, 6))) for _ in range(30)]
    tgt = [cipher(s) for s in src]
    src_path = tmp_path / "pivot.txt"
    tgt_path = tmp_path / "new.txt"
    src_path.write_text("\n".join(src) + "\n", encoding="utf-8")
    tgt_path.write_text("\n".join(tgt) + "\n", encoding="utf-8")
    return src_path, tgt_path


def run(*argv) -> int:
    return main([str(a) for a in argv])


def test_generate_schedule_train_eval_end_to_end(tmp_path, corpus_files, capsys):
    src, tgt = corpus_files
    ds_path = tmp_path / "ds.jsonl"
    rc = run("generate", "--src", src, "--tgt", tgt, "--src-lang", "zza", "--tgt-lang", "zzb",
             "--tasks", "word,span,mt", "--seed", "5", "--out", ds_path)
    assert rc == 0
    ds = read_dataset(ds_path)
    assert len(ds) == 3 * 30 - ds.manifest["total_skipped"]

    plan_path = tmp_path / "plan.jsonl"
    rc = run("schedule", "--new", ds_path, "--batch-size", "8", "--seed", "6",
             "--out", plan_path)
    assert rc == 0
    meta, plan = read_batch_plan(plan_path)
    assert meta["batch_size"] == 8 and meta["replay_size"] == 0

    cfg_path = tmp_path / "trainer.json"
    cfg_path.write_text(json.dumps({
        "seed": 9, "max_steps": 12, "learning_rate": 1e-3, "eval_interval": 6,
        "dim": 16, "n_layers": 1, "n_heads": 2, "context": 96,
    }), encoding="utf-8")
    model_path = tmp_path / "model.ia1m"
    curves_path = tmp_path / "curves.csv"
    rc = run("train", "--schedule", plan_path, "--config", cfg_path,
             "--val", ds_path, "--out-model", model_path, "--curves", curves_path)
    assert rc == 0
    model = load_model(model_path)
    assert model.cfg.dim == 16
    curve = LossCurve.read_csv(curves_path)
    assert len(curve.train) == 12

    eval_path = tmp_path / "eval.tsv"
    eval_path.write_text(
        "text\tlabel\tlang\n"
        "stu vwx\tpositive\tind\n"
        "zyx wvs\tnegative\teng\n",
        encoding="utf-8",
    )
    metrics_path = tmp_path / "metrics.json"
    rc = run("eval", "--model", model_path, "--data", eval_path, "--out", metrics_path)
    assert rc == 0
    doc = json.loads(metrics_path.read_text(encoding="utf-8"))
    assert set(doc) == {"averaged", "per_language", "per_template"}
    assert len(doc["per_template"]) == 6


def test_generate_exit_code_on_missing_file(tmp_path):
    rc = run("generate", "--src", tmp_path / "nope.txt", "--tgt", tmp_path / "also.txt",
             "--src-lang", "eng", "--tgt-lang", "ind", "--seed", "1",
             "--out", tmp_path / "o.jsonl")
    assert rc == 2


def test_schedule_replay_requires_old(tmp_path, corpus_files):
    src, tgt = corpus_files
    ds_path = tmp_path / "ds.jsonl"
    assert run("generate", "--src", src, "--tgt", tgt, "--src-lang", "zza",
               "--tgt-lang", "zzb", "--seed", "1", "--out", ds_path) == 0
    rc = run("schedule", "--new", ds_path, "--replay-size", "5", "--batch-size", "4",
             "--seed", "2", "--out", tmp_path / "p.jsonl")
    assert rc == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_nonfinite_exit_code(tmp_path, corpus_files):
    src, tgt = corpus_files
    ds_path, plan_path = tmp_path / "ds.jsonl", tmp_path / "plan.jsonl"
    run("generate", "--src", src, "--tgt", tgt, "--src-lang", "zza", "--tgt-lang", "zzb",
        "--seed", "5", "--out", ds_path)
    run("schedule", "--new", ds_path, "--batch-size", "4", "--seed", "6", "--out", plan_path)
    cfg_path = tmp_path / "trainer.json"
    # a huge learning rate detonates the loss within a few steps
    cfg_path.write_text(json.dumps({
        "seed": 9, "max_steps": 40, "learning_rate": 1e6, "eval_interval": 100,
        "dim": 16, "n_layers": 1, "n_heads": 2, "context": 96,
    }), encoding="utf-8")
    rc = run("train", "--schedule", plan_path, "--config", cfg_path,
             "--out-model", tmp_path / "m.ia1m")
    assert rc == 3


def write_pipeline_config(tmp_path, src, tgt, max_steps=10, with_eval=True):
    eval_path = tmp_path / "eval.tsv"
    eval_path.write_text(
        "text\tlabel\tlang\nstu vwx\tpositive\tind\nzyx wvs\tnegative\teng\n",
        encoding="utf-8",
    )
    cfg = {
        "version": "1",
        "seed": 11,
        "corpus": {"src": src.name, "tgt": tgt.name, "src_lang": "zza", "tgt_lang": "zzb"},
        "split": {"train_fraction": 0.8},
        "generate": {"tasks": ["word", "span", "mt"], "direction": "pivot2new"},
        "replay": {"size": 0},
        "trainer": {"max_steps": max_steps, "dim": 16, "n_layers": 1, "n_heads": 2,
                    "context": 96, "learning_rate": 1e-3, "batch_size": 8,
                    "eval_interval": 5},
        "eval": {"data": eval_path.name} if with_eval else None,
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def test_pipeline_reproducible_digests(tmp_path, corpus_files):
    src, tgt = corpus_files
    cfg_path = write_pipeline_config(tmp_path, src, tgt)
    assert run("pipeline", "--config", cfg_path, "--workdir", tmp_path / "run1") == 0
    assert run("pipeline", "--config", cfg_path, "--workdir", tmp_path / "run2") == 0
    m1 = json.loads((tmp_path / "run1" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "run2" / "manifest.json").read_text())
    assert m1 == m2
    assert "config_digest" in m1
    stages = m1["stages"]
    assert set(stages) == {"generate", "schedule", "train", "eval"}
    # every declared output exists and its digest matches
    from ia1.pipeline import file_digest
    for stage, outputs in stages.items():
        for entry in outputs.values():
            if isinstance(entry, dict) and "sha256" in entry:
                path = tmp_path / "run1" / entry["path"]
                assert path.is_file()
                assert file_digest(path) == entry["sha256"]


def test_pipeline_seed_override_changes_outputs(tmp_path, corpus_files):
    src, tgt = corpus_files
    cfg_path = write_pipeline_config(tmp_path, src, tgt, max_steps=5, with_eval=False)
    assert run("pipeline", "--config", cfg_path, "--workdir", tmp_path / "a") == 0
    assert run("pipeline", "--config", cfg_path, "--workdir", tmp_path / "b",
               "--seed", "999") == 0
    da = json.loads((tmp_path / "a" / "manifest.json").read_text())
    db = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert da["stages"]["generate"] != db["stages"]["generate"]


def test_pipeline_missing_reference_fails_validation(tmp_path, corpus_files):
    src, tgt = corpus_files
    cfg_path = write_pipeline_config(tmp_path, src, tgt)
    doc = json.loads(cfg_path.read_text())
    doc["generate"]["templates"] = "missing_templates.json"
    cfg_path.write_text(json.dumps(doc), encoding="utf-8")
    rc = run("pipeline", "--config", cfg_path, "--workdir", tmp_path / "w")
    assert rc == 2
    assert not (tmp_path / "w" / "manifest.json").exists()


def test_pipeline_requires_explicit_seed(tmp_path, corpus_files):
    src, tgt = corpus_files
    cfg_path = write_pipeline_config(tmp_path, src, tgt)
    doc = json.loads(cfg_path.read_text())
    del doc["seed"]
    cfg_path.write_text(json.dumps(doc), encoding="utf-8")
    assert run("pipeline", "--config", cfg_path, "--workdir", tmp_path / "w") == 2


def test_report_deltas_and_smoothing(tmp_path):
    metrics = {
        "per_template": {"t": {"accuracy": 0.6, "weighted_f1": 0.5}},
        "averaged": {"accuracy": 0.6, "weighted_f1": 0.5},
        "per_language": {
            "eng": {"accuracy": 0.6, "weighted_f1": 0.5},
            "ind": {"accuracy": 0.4, "weighted_f1": 0.3},
        },
    }
    run_path = tmp_path / "run.json"
    run_path.write_text(json.dumps(metrics), encoding="utf-8")

    curves = tmp_path / "curves.csv"
    curves.write_text(
        "step,tag,split,loss\n"
        "0,train,train,2.0\n1,train,train,1.0\n2,train,train,0.5\n"
        "1,val,val,1.5\n2,val,val,1.2\n",
        encoding="utf-8",
    )
    outdir = tmp_path / "report"
    rc = run("report", "--curves", curves, "--metrics", run_path, "--baseline", run_path,
             "--window", "2", "--out-dir", outdir)
    assert rc == 0

    delta_lines = (outdir / "delta_per_language.csv").read_text().strip().splitlines()
    assert delta_lines[0] == "lang,delta_accuracy,delta_weighted_f1"
    for line in delta_lines[1:]:
        _, da, df = line.split(",")
        assert float(da) == 0.0 and float(df) == 0.0  # baseline equals run

    smooth_lines = (outdir / "curves_smoothed.csv").read_text().strip().splitlines()
    assert smooth_lines[0] == "step,tag,split,loss,smoothed_loss"
    assert len(smooth_lines) == 1 + 5
    # window-2 moving average of the train series: 2.0, 1.5, 0.75
    train_rows = [l.split(",") for l in smooth_lines[1:] if l.split(",")[1] == "train"]
    assert [float(r[4]) for r in train_rows] == [2.0, 1.5, 0.75]


def test_report_missing_column_schema_violation(tmp_path):
    curves = tmp_path / "curves.csv"
    curves.write_text("step,loss\n0,2.0\n", encoding="utf-8")
    rc = run("report", "--curves", curves, "--out-dir", tmp_path / "r")
    assert rc == 2


def test_report_requires_some_input(tmp_path):
    assert run("report", "--out-dir", tmp_path / "r") == 2
