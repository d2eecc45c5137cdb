"""Kernel-size and attention-gate ablations under a shared split and budget."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

from ..recognizer import RecognizerConfig, RecognizerModel, TrainConfig, train
from .dataset import ImageDataset
from .evaluate import EvalReport, evaluate, split_70_30
from .pipeline import model_config_for

log = logging.getLogger(__name__)

KERNEL_VARIANTS = {
    "1x1": (1, 1, 1),
    "3x3": (3, 3, 3),
    "5x5": (5, 5, 5),
    "7x7": (7, 7, 7),
    "multi-scale": (3, 5, 7),
}


@dataclass
class AblationRow:
    name: str
    report: EvalReport
    parameters: int


def _run_variants(dataset: ImageDataset, variants: dict, train_config: TrainConfig) -> list:
    train_idx, test_idx = split_70_30(dataset.labels, train_config.seed)
    train_ds, test_ds = dataset.subset(train_idx), dataset.subset(test_idx)
    rows = []
    for name, cfg in variants.items():
        model = RecognizerModel(cfg, seed=train_config.seed)
        train(model, train_ds.images, train_ds.labels, train_config)
        report = evaluate(model, test_ds.images, test_ds.labels, dataset.class_names)
        log.info("%s: accuracy %.4f f1 %.4f", name, report.accuracy, report.f1)
        rows.append(AblationRow(name, report, model.num_parameters()))
    return rows


def ablate_kernels(dataset: ImageDataset, train_config: TrainConfig | None = None, base: RecognizerConfig | None = None) -> list:
    """Five variants: every branch at 1x1, 3x3, 5x5, 7x7, and the mixed 3/5/7 design."""
    train_config = train_config or TrainConfig()
    cfg = model_config_for(dataset, base)
    variants = {name: dataclasses.replace(cfg, branch_kernels=k) for name, k in KERNEL_VARIANTS.items()}
    return _run_variants(dataset, variants, train_config)


def ablate_ag(dataset: ImageDataset, train_config: TrainConfig | None = None, base: RecognizerConfig | None = None) -> list:
    train_config = train_config or TrainConfig()
    cfg = model_config_for(dataset, base)
    variants = {
        "w/ AG": dataclasses.replace(cfg, attention_gates=True),
        "w/o AG": dataclasses.replace(cfg, attention_gates=False),
    }
    return _run_variants(dataset, variants, train_config)


def format_table(rows, title: str = "", with_parameters: bool = False) -> str:
    head = ["Variant"] + (["Parameters"] if with_parameters else []) + ["Accuracy", "Precision", "Recall", "F1"]
    lines = [title] if title else []
    lines.append("\t".join(head))
    for r in rows:
        cells = [r.name] + ([str(r.parameters)] if with_parameters else [])
        cells += [f"{v:.5f}" for v in (r.report.accuracy, r.report.precision, r.report.recall, r.report.f1)]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def rows_to_dict(rows) -> list:
    return [
        {
            "variant": r.name,
            "parameters": r.parameters,
            "accuracy": r.report.accuracy,
            "precision": r.report.precision,
            "recall": r.report.recall,
            "f1": r.report.f1,
        }
        for r in rows
    ]
