"""Plot-ready summaries: per-language deltas against a baseline and smoothed
loss curves. Rendering itself is out of scope; these emit the data series."""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import SchemaViolation
from .evaluator import EvalMetrics
from .model.train import LossCurve


def load_metrics(path: str | Path) -> EvalMetrics:
    return EvalMetrics.from_json(Path(path).read_text(encoding="utf-8"))


def write_delta_report(
    metrics_path: str | Path, baseline_path: str | Path, out_path: str | Path
) -> None:
    """Per-language (run - baseline) accuracy and weighted F1."""
    run = load_metrics(metrics_path)
    base = load_metrics(baseline_path)
    langs = sorted(set(run.per_language) | set(base.per_language))
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lang", "delta_accuracy", "delta_weighted_f1"])
        for lang in langs:
            if lang not in run.per_language or lang not in base.per_language:
                raise SchemaViolation(f"language {lang!r} missing from one of the reports")
            r, b = run.per_language[lang], base.per_language[lang]
            writer.writerow(
                [lang, repr(r["accuracy"] - b["accuracy"]), repr(r["weighted_f1"] - b["weighted_f1"])]
            )


def _moving_average(values: list[float], window: int) -> list[float]:
    out = []
    acc = 0.0
    for i, v in enumerate(values):
        acc += v
        if i >= window:
            acc -= values[i - window]
        out.append(acc / min(i + 1, window))
    return out


def write_smoothed_curves(curves_path: str | Path, out_path: str | Path, window: int = 10) -> None:
    """Moving-average smoothing per (tag, split) series, keeping the raw loss column."""
    if window < 1:
        raise SchemaViolation(f"window must be >= 1, got {window}")
    curve = LossCurve.read_csv(curves_path)
    series: list[tuple[str, str, list[tuple[int, float]]]] = [("train", "train", curve.train)]
    series += [(tag, "val", pts) for tag, pts in sorted(curve.val.items())]
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "tag", "split", "loss", "smoothed_loss"])
        for tag, split, pts in series:
            smoothed = _moving_average([loss for _, loss in pts], window)
            for (step, loss), sm in zip(pts, smoothed):
                writer.writerow([step, tag, split, repr(loss), repr(sm)])
