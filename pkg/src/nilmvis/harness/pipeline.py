"""End-to-end protocol: split, train, evaluate, export."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..recognizer import RecognizerConfig, RecognizerModel, TrainConfig, TrainResult, train
from .dataset import ImageDataset
from .evaluate import EvalReport, evaluate, split_70_30
from .export import export_artifacts


@dataclass
class PipelineResult:
    model: RecognizerModel
    report: EvalReport
    training: TrainResult
    train_idx: np.ndarray
    test_idx: np.ndarray


def model_config_for(dataset: ImageDataset, base: RecognizerConfig | None = None) -> RecognizerConfig:
    base = base or RecognizerConfig()
    return dataclasses.replace(base, num_classes=len(dataset.class_names))


def write_loss_curve(path, curve) -> None:
    lines = ["epoch,loss"] + [f"{i + 1},{v!r}" for i, v in enumerate(curve)]
    Path(path).write_text("\n".join(lines) + "\n")


def run_pipeline(
    dataset: ImageDataset,
    train_config: TrainConfig | None = None,
    model_config: RecognizerConfig | None = None,
    out_dir=None,
    extra: dict | None = None,
    progress=None,
) -> PipelineResult:
    """Split 70:30 (seeded), train on the train part, evaluate on the test part.

    With ``out_dir`` also writes model.ckpt, loss_curve.csv, split.json and the
    evaluation artifacts (test-record PNGs, confusion.csv/png, report.json).
    """
    train_config = train_config or TrainConfig()
    cfg = model_config_for(dataset, model_config)
    train_idx, test_idx = split_70_30(dataset.labels, train_config.seed)
    train_ds, test_ds = dataset.subset(train_idx), dataset.subset(test_idx)

    model = RecognizerModel(cfg, seed=train_config.seed)
    training = train(model, train_ds.images, train_ds.labels, train_config, progress=progress)
    report = evaluate(model, test_ds.images, test_ds.labels, dataset.class_names)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        model.save(out / "model.ckpt", dataset.class_names)
        write_loss_curve(out / "loss_curve.csv", training.loss_curve)
        split = {"seed": train_config.seed, "train": list(map(str, train_ds.ids)), "test": list(map(str, test_ds.ids))}
        (out / "split.json").write_text(json.dumps(split, indent=1) + "\n")
        meta = {
            "train_config": dataclasses.asdict(train_config),
            "model_config": cfg.to_dict(),
            "parameters": model.num_parameters(),
            "train_size": int(train_idx.size),
            "test_size": int(test_idx.size),
            "final_train_loss": training.loss_curve[-1] if training.loss_curve else None,
            "train_accuracy": training.train_accuracy,
        }
        meta.update(extra or {})
        export_artifacts(report, dict(zip(test_ds.ids, test_ds.images)), out, meta)
    return PipelineResult(model, report, training, train_idx, test_idx)
