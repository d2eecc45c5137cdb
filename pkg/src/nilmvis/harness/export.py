from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ..errors import IoError
from ..gaf import save_png
from .evaluate import EvalReport

CELL = 28
MARGIN = 120


def write_confusion_csv(report: EvalReport, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\pred"] + list(report.class_names))
    for name, row in zip(report.class_names, report.confusion):
        w.writerow([name] + [int(v) for v in row])
    Path(path).write_text(buf.getvalue())


def render_confusion_png(report: EvalReport, path) -> None:
    """Row-normalised heat map, white (0) to dark blue (1), with counts in the cells."""
    cm = report.confusion
    k = len(cm)
    rows = cm.sum(axis=1, keepdims=True)
    frac = np.divide(cm, rows, out=np.zeros(cm.shape), where=rows > 0)
    size = (MARGIN + k * CELL + 8, MARGIN + k * CELL + 8)
    img = Image.new("RGB", size, (255, 255, 255))
    draw = ImageDraw.Draw(img)
    for i in range(k):
        for j in range(k):
            v = frac[i, j]
            color = (int(round(255 - 247 * v)), int(round(255 - 207 * v)), int(round(255 - 148 * v)))
            x0, y0 = MARGIN + j * CELL, MARGIN + i * CELL
            draw.rectangle([x0, y0, x0 + CELL - 1, y0 + CELL - 1], fill=color, outline=(200, 200, 200))
            if cm[i, j]:
                ink = (255, 255, 255) if v > 0.5 else (0, 0, 0)
                draw.text((x0 + 3, y0 + 8), str(int(cm[i, j])), fill=ink)
    for i, name in enumerate(report.class_names):
        label = name[:18]
        draw.text((4, MARGIN + i * CELL + 8), label, fill=(0, 0, 0))
        draw.text((MARGIN + i * CELL + 3, 4 + (i % 8) * 13), label[:10], fill=(0, 0, 0))
    img.save(Path(path), format="PNG")


def write_report(report: EvalReport, path, extra: dict | None = None) -> None:
    d = report.to_dict()
    if extra:
        d.update(extra)
    Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")


def export_artifacts(report: EvalReport, images: dict, out_dir, extra: dict | None = None) -> list:
    """Write ``images/<id>.png`` per record, confusion.csv, confusion.png and report.json."""
    out = Path(out_dir)
    try:
        (out / "images").mkdir(parents=True, exist_ok=True)
        written = []
        for rec_id, img in images.items():
            p = out / "images" / f"{rec_id}.png"
            save_png(img, p)
            written.append(p)
        for name, fn in (("confusion.csv", write_confusion_csv), ("confusion.png", render_confusion_png)):
            fn(report, out / name)
            written.append(out / name)
        write_report(report, out / "report.json", extra)
        written.append(out / "report.json")
    except OSError as exc:
        raise IoError(f"cannot write artifacts to {out}: {exc}") from None
    return written
