"""Command-line entry point: ``nilmvis <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from ..errors import DataError, NilmError, NumericError
from ..gaf import save_png
from ..recognizer import RecognizerConfig, RecognizerModel, TrainConfig
from .. import synth

log = logging.getLogger("nilmvis")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, manifest=True, training=False, checkpoint=False):
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--seed", type=int, default=42)
    if manifest:
        p.add_argument("--manifest", type=Path, required=True)
        p.add_argument("--mains-freq", type=float, default=None, help="override the manifest value")
        p.add_argument("--sample-rate", type=float, default=None, help="override the manifest value")
    if training:
        d = TrainConfig()
        p.add_argument("--epochs", type=int, default=d.epochs)
        p.add_argument("--batch", type=int, default=d.batch)
        p.add_argument("--lr", type=float, default=d.lr)
        p.add_argument("--optimizer", choices=["adam", "sgd"], default=d.optimizer)
        p.add_argument("--no-ag", action="store_true", help="disable attention gates")
        p.add_argument("--branch-kernels", dest="kernels", type=int, nargs=3, metavar="K", default=None, help="MFDEM branch kernel sizes")
        p.add_argument("--channels", type=int, nargs=4, metavar="C", default=None)
    if checkpoint:
        p.add_argument("--checkpoint", type=Path, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nilmvis", description="Current-feature-image load recognition toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic corpus and manifest")
    _common(p, manifest=False)
    p.add_argument("--spec", type=Path, default=None, help="JSON spec file; default 12-class spec if omitted")
    p.add_argument("--instances", type=int, default=None, help="override instances per class")
    p.add_argument("--mains-freq", type=float, default=None)
    p.add_argument("--masking", action="store_true", help="emit resistive+switching aggregates instead")
    p.add_argument("--dump-spec", action="store_true", help="also write the effective spec as spec.json")

    p = sub.add_parser("encode", help="render feature images for every manifest record")
    _common(p)

    p = sub.add_parser("train", help="train on the 70%% split and save a checkpoint")
    _common(p, training=True, checkpoint=True)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the 30%% split")
    _common(p, checkpoint=True)
    p.add_argument("--all", action="store_true", help="evaluate on every record instead of the test split")

    p = sub.add_parser("run", help="train + eval + export in one go")
    _common(p, training=True)

    p = sub.add_parser("ablate", help="kernel-size or attention-gate ablation")
    _common(p, training=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--kernels", dest="kernel_table", action="store_true", help="kernel-size sweep: 1x1, 3x3, 5x5, 7x7 and mixed branches")
    g.add_argument("--ag", action="store_true", help="with/without attention gates")

    p = sub.add_parser("gradcheck", help="finite-difference gradient suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="skip the thinned full-model check")
    return ap


def _train_config(a) -> TrainConfig:
    return TrainConfig(epochs=a.epochs, batch=a.batch, lr=a.lr, seed=a.seed, optimizer=a.optimizer)


def _model_config(a) -> RecognizerConfig:
    cfg = RecognizerConfig()
    changes = {}
    if a.no_ag:
        changes["attention_gates"] = False
    if a.kernels:
        changes["branch_kernels"] = tuple(a.kernels)
    if a.channels:
        changes["channels"] = tuple(a.channels)
    return dataclasses.replace(cfg, **changes)


def _load(a):
    from .dataset import ingest, load_manifest

    manifest = load_manifest(a.manifest, a.mains_freq, a.sample_rate)
    result = ingest(manifest)
    if result.skipped:
        log.warning("skipped %d of %d records", len(result.skipped), len(manifest.records))
    return result


def cmd_synth(a):
    spec = synth.load_spec(a.spec) if a.spec else synth.default_spec()
    changes = {"seed": a.seed}
    if a.instances:
        changes["instances_per_class"] = a.instances
    if a.mains_freq:
        changes["mains_freq"] = a.mains_freq
    spec = dataclasses.replace(spec, **changes)
    corpus = synth.build_masking_corpus(spec) if a.masking else synth.build_corpus(spec)
    name = "synthetic-masking" if a.masking else "synthetic"
    path = synth.write_corpus(corpus, a.out_dir, spec.mains_freq, name=name)
    if a.dump_spec:
        synth.save_spec(spec, a.out_dir / "spec.json")
    print(f"wrote {len(corpus)} records and {path}")


def cmd_encode(a):
    result = _load(a)
    ds = result.dataset
    out = a.out_dir / "images"
    out.mkdir(parents=True, exist_ok=True)
    for rec_id, img in zip(ds.ids, ds.images):
        save_png(img, out / f"{rec_id}.png")
    print(f"encoded {len(ds)} images into {out} ({len(result.skipped)} skipped)")


def cmd_train(a):
    from .evaluate import split_70_30
    from .pipeline import model_config_for, write_loss_curve
    from ..recognizer import train

    result = _load(a)
    ds = result.dataset
    cfg = model_config_for(ds, _model_config(a))
    tc = _train_config(a)
    train_idx, _ = split_70_30(ds.labels, tc.seed)
    model = RecognizerModel(cfg, seed=tc.seed)
    tr = ds.subset(train_idx)
    res = train(model, tr.images, tr.labels, tc, progress=lambda e, l: print(f"epoch {e + 1}/{tc.epochs} loss {l:.5f}"))
    a.out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = a.checkpoint or a.out_dir / "model.ckpt"
    model.save(ckpt, ds.class_names)
    write_loss_curve(a.out_dir / "loss_curve.csv", res.loss_curve)
    print(f"saved {ckpt} ({model.num_parameters()} parameters); train accuracy {res.train_accuracy:.4f}")


def cmd_eval(a):
    from .evaluate import evaluate, split_70_30
    from .export import export_artifacts

    result = _load(a)
    ds = result.dataset
    ckpt = a.checkpoint or a.out_dir / "model.ckpt"
    model, names = RecognizerModel.load(ckpt)
    if names is not None and list(names) != list(ds.class_names):
        raise DataError("checkpoint classes differ from the manifest classes")
    if not a.all:
        _, test_idx = split_70_30(ds.labels, a.seed)
        ds = ds.subset(test_idx)
    report = evaluate(model, ds.images, ds.labels, ds.class_names)
    extra = {"skipped": [list(s) for s in result.skipped], "checkpoint": str(ckpt.name)}
    export_artifacts(report, dict(zip(ds.ids, ds.images)), a.out_dir, extra)
    _print_report(report)


def cmd_run(a):
    from .pipeline import run_pipeline

    result = _load(a)
    res = run_pipeline(
        result.dataset,
        _train_config(a),
        _model_config(a),
        a.out_dir,
        extra={"skipped": [list(s) for s in result.skipped]},
        progress=lambda e, l: print(f"epoch {e + 1}/{a.epochs} loss {l:.5f}"),
    )
    _print_report(res.report)


def cmd_ablate(a):
    from .ablation import ablate_ag, ablate_kernels, format_table, rows_to_dict

    ds = _load(a).dataset
    tc = _train_config(a)
    if a.kernel_table:
        rows = ablate_kernels(ds, tc, _model_config(a))
        text, name = format_table(rows, "Kernel ablation"), "ablation_kernels"
    else:
        rows = ablate_ag(ds, tc, _model_config(a))
        text, name = format_table(rows, "Attention-gate ablation", with_parameters=True), "ablation_ag"
    a.out_dir.mkdir(parents=True, exist_ok=True)
    (a.out_dir / f"{name}.txt").write_text(text)
    (a.out_dir / f"{name}.json").write_text(json.dumps(rows_to_dict(rows), indent=2) + "\n")
    print(text, end="")


def cmd_gradcheck(a):
    from .gradsuite import TOLERANCE, run_all

    results = run_all(seed=a.seed, include_model=not a.quick)
    worst = 0.0
    for name, err in results.items():
        worst = max(worst, err)
        print(f"{'PASS' if err < TOLERANCE else 'FAIL'}  {name:<32s} max rel err {err:.3e}")
    if worst >= TOLERANCE:
        raise NumericError(f"gradient check failed (worst {worst:.3e} >= {TOLERANCE})")


def _print_report(report):
    print(f"accuracy {report.accuracy:.4f}  precision {report.precision:.4f}  recall {report.recall:.4f}  f1 {report.f1:.4f}")


COMMANDS = {
    "synth": cmd_synth,
    "encode": cmd_encode,
    "train": cmd_train,
    "eval": cmd_eval,
    "run": cmd_run,
    "ablate": cmd_ablate,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NilmError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
