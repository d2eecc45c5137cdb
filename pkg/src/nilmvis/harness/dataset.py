"""Dataset manifests and ingestion of waveform records into feature images.

Manifest schema (JSON)::

    {
      "name": "plaid_mini",
      "mains_freq": 60.0,
      "sample_rate": 30000.0,
      "classes": ["fan", "laptop", "kettle"],
      "records": [{"id": "r001", "path": "waveforms/r001.csv", "label": "fan"}, ...]
    }

Record paths are relative to the manifest's directory. ``id`` is optional and
defaults to the CSV file stem.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import AllRecordsSkipped, DataError, ManifestInvalid
from ..gaf import encode
from ..signal import CurrentCycle, WaveletConfig, extract_cycle, extract_features, read_waveform_csv

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Record:
    id: str
    path: Path
    label: str


@dataclass
class DatasetManifest:
    name: str
    mains_freq: float
    sample_rate: float
    classes: list
    records: list = field(default_factory=list)

    def validate(self) -> None:
        if not self.classes:
            raise ManifestInvalid("manifest declares no classes")
        if len(set(self.classes)) != len(self.classes):
            raise ManifestInvalid("duplicate class labels")
        if not self.mains_freq > 0 or not self.sample_rate > 0:
            raise ManifestInvalid("mains_freq and sample_rate must be positive")
        ids = set()
        for r in self.records:
            if r.label not in self.classes:
                raise ManifestInvalid(f"record {r.id}: label {r.label!r} not among classes")
            if not r.path.is_file():
                raise ManifestInvalid(f"record {r.id}: {r.path} does not exist")
            if r.id in ids:
                raise ManifestInvalid(f"duplicate record id {r.id!r}")
            ids.add(r.id)


def load_manifest(path, mains_freq: float | None = None, sample_rate: float | None = None) -> DatasetManifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
        root = path.parent
        records = [
            Record(str(r.get("id") or Path(r["path"]).stem), (root / r["path"]).resolve(), str(r["label"]))
            for r in raw["records"]
        ]
        manifest = DatasetManifest(
            name=str(raw.get("name", path.stem)),
            mains_freq=float(mains_freq or raw["mains_freq"]),
            sample_rate=float(sample_rate or raw["sample_rate"]),
            classes=[str(c) for c in raw["classes"]],
            records=records,
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ManifestInvalid(f"{path}: {exc}") from None
    manifest.validate()
    return manifest


@dataclass
class ImageDataset:
    images: np.ndarray  # (M, 40, 40, 3) uint8
    labels: np.ndarray  # (M,) class indices
    class_names: list
    ids: list

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "ImageDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return ImageDataset(self.images[idx], self.labels[idx], self.class_names, [self.ids[i] for i in idx])


@dataclass
class IngestResult:
    dataset: ImageDataset
    skipped: list  # (record id, reason)


def cycle_to_image(cycle: CurrentCycle, wavelet: WaveletConfig | None = None) -> np.ndarray:
    return encode(extract_features(cycle, wavelet))


def ingest(manifest: DatasetManifest, wavelet: WaveletConfig | None = None) -> IngestResult:
    """CSV -> cycle -> features -> image for every record; bad records are skipped."""
    images, labels, ids, skipped = [], [], [], []
    for rec in manifest.records:
        try:
            raw = read_waveform_csv(rec.path)
            cycle = extract_cycle(raw, manifest.sample_rate, manifest.mains_freq)
            img = cycle_to_image(cycle, wavelet)
        except (DataError, ValueError) as exc:
            log.warning("skipping %s: %s: %s", rec.id, type(exc).__name__, exc)
            skipped.append((rec.id, f"{type(exc).__name__}: {exc}"))
            continue
        images.append(img)
        labels.append(manifest.classes.index(rec.label))
        ids.append(rec.id)
    if not images:
        raise AllRecordsSkipped(f"all {len(manifest.records)} records failed extraction")
    ds = ImageDataset(np.stack(images), np.asarray(labels, dtype=np.int64), list(manifest.classes), ids)
    return IngestResult(ds, skipped)


def dataset_from_corpus(corpus, mains_freq: float = 50.0, class_names=None, wavelet=None) -> ImageDataset:
    """Encode in-memory ``(waveform[80], label)`` pairs without going through CSV files."""
    if class_names is None:
        class_names = list(dict.fromkeys(label for _, label in corpus))
    images, labels, ids, counters = [], [], [], {}
    for wave, label in corpus:
        images.append(cycle_to_image(CurrentCycle(wave, mains_freq), wavelet))
        labels.append(class_names.index(label))
        i = counters.get(label, 0)
        counters[label] = i + 1
        ids.append(f"{label}_{i:04d}")
    return ImageDataset(np.stack(images), np.asarray(labels, dtype=np.int64), list(class_names), ids)
