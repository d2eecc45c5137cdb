"""Synthetic per-cycle current waveforms for resistive, pump, motor and switching loads.

Spec file schema (JSON)::

    {
      "seed": 42,
      "instances_per_class": 100,
      "mains_freq": 50.0,
      "classes": [
        {"name": "kettle", "kind": "resistive", "amplitude": 8.25,
         "harmonics": {"1": 1.0}, "phases": {"1": 0.0},
         "noise_sigma": 0.04125, "jitter": 0.05}
      ]
    }

``harmonics`` maps odd harmonic order to magnitude relative to the fundamental;
``phases`` (radians) and ``noise_sigma`` (amperes) are optional. A missing
``noise_sigma`` defaults to ``DEFAULT_NOISE_FRAC`` of the amplitude.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import LengthMismatch
from .signal import CYCLE_LEN, write_waveform_csv

DEFAULT_NOISE_FRAC = 0.005
DEFAULT_JITTER = 0.05

# amperes per watt, chosen so 1800 W maps to 8.25 A and 24 W to 0.11 A (75:1)
_A_PER_W = 8.25 / 1800.0


@dataclass(frozen=True)
class LoadProfile:
    class_name: str
    amplitude: float
    harmonic_levels: dict = field(default_factory=lambda: {1: 1.0})
    harmonic_phases: dict = field(default_factory=dict)
    noise_sigma: float | None = None
    jitter: float = DEFAULT_JITTER
    kind: str = "resistive"

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError(f"{self.class_name}: amplitude must be positive")
        levels = {int(k): float(v) for k, v in self.harmonic_levels.items()}
        for k, m in levels.items():
            if k < 1 or k > 40 or k % 2 == 0:
                raise ValueError(f"{self.class_name}: harmonic order {k} must be odd in 1..40")
            if not 0.0 <= m <= 1.5:
                raise ValueError(f"{self.class_name}: magnitude {m} outside [0, 1.5]")
        object.__setattr__(self, "harmonic_levels", dict(sorted(levels.items())))
        phases = {int(k): float(v) for k, v in self.harmonic_phases.items()}
        object.__setattr__(self, "harmonic_phases", phases)
        if self.noise_sigma is None:
            object.__setattr__(self, "noise_sigma", DEFAULT_NOISE_FRAC * self.amplitude)

    def to_dict(self) -> dict:
        return {
            "name": self.class_name,
            "kind": self.kind,
            "amplitude": self.amplitude,
            "harmonics": {str(k): v for k, v in self.harmonic_levels.items()},
            "phases": {str(k): v for k, v in self.harmonic_phases.items()},
            "noise_sigma": self.noise_sigma,
            "jitter": self.jitter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoadProfile":
        return cls(
            class_name=d["name"],
            amplitude=float(d["amplitude"]),
            harmonic_levels=d.get("harmonics", {1: 1.0}),
            harmonic_phases=d.get("phases", {}),
            noise_sigma=d.get("noise_sigma"),
            jitter=float(d.get("jitter", DEFAULT_JITTER)),
            kind=d.get("kind", "resistive"),
        )


@dataclass(frozen=True)
class SynthDatasetSpec:
    classes: tuple
    instances_per_class: int = 100
    seed: int = 42
    mains_freq: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if len(self.classes) < 2:
            raise ValueError("a dataset needs at least 2 classes")
        if self.instances_per_class < 1:
            raise ValueError("instances_per_class must be >= 1")
        names = [p.class_name for p in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate class names")

    @property
    def labels(self) -> list:
        return [p.class_name for p in self.classes]

    def profile(self, name: str) -> LoadProfile:
        for p in self.classes:
            if p.class_name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "instances_per_class": self.instances_per_class,
            "mains_freq": self.mains_freq,
            "classes": [p.to_dict() for p in self.classes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthDatasetSpec":
        return cls(
            classes=[LoadProfile.from_dict(c) for c in d["classes"]],
            instances_per_class=int(d.get("instances_per_class", 100)),
            seed=int(d.get("seed", 42)),
            mains_freq=float(d.get("mains_freq", 50.0)),
        )


def load_spec(path) -> SynthDatasetSpec:
    return SynthDatasetSpec.from_dict(json.loads(Path(path).read_text()))


def save_spec(spec: SynthDatasetSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


def _profile(name, kind, watts, harmonics, **kw) -> LoadProfile:
    return LoadProfile(name, round(watts * _A_PER_W, 6), harmonics, kind=kind, **kw)


def default_profiles() -> list:
    """Twelve household loads from 24 W to 1800 W."""
    return [
        _profile("kettle", "resistive", 1800, {1: 1.0}),
        _profile("hair_dryer", "resistive", 1200, {1: 1.0, 3: 0.08}),
        _profile("rice_cooker", "resistive", 700, {1: 1.0, 5: 0.06, 7: 0.03}),
        _profile("washing_machine", "pump", 500, {1: 1.0, 3: 0.4, 5: 0.25, 7: 0.15}),
        _profile("refrigerator", "pump", 150, {1: 1.0, 3: 0.3, 5: 0.15, 7: 0.1}),
        _profile("air_conditioner", "pump", 1000, {1: 1.0, 3: 0.2, 5: 0.3, 7: 0.1}),
        _profile("electric_fan", "motor", 50, {1: 1.0, 3: 0.25, 5: 0.15, 7: 0.1, 9: 0.08}),
        _profile("vacuum_cleaner", "motor", 800, {1: 1.0, 3: 0.35, 5: 0.2, 7: 0.15, 9: 0.12}),
        _profile("tv", "switching", 120, {1: 1.0, 3: 0.9, 5: 0.8, 7: 0.7, 9: 0.6, 11: 0.5, 13: 0.45}),
        _profile("notebook", "switching", 65, {1: 1.0, 3: 0.85, 5: 0.65, 7: 0.45, 9: 0.3, 11: 0.2, 13: 0.15}),
        _profile("router", "switching", 24, {1: 1.0, 3: 0.95, 5: 0.9, 7: 0.85, 9: 0.8, 11: 0.75, 13: 0.7}),
        _profile("desktop_pc", "switching", 200, {1: 1.0, 3: 0.75, 5: 0.5, 7: 0.3, 9: 0.2, 11: 0.15, 13: 0.1}),
    ]


def default_spec(instances_per_class: int = 100, seed: int = 42, mains_freq: float = 50.0) -> SynthDatasetSpec:
    return SynthDatasetSpec(default_profiles(), instances_per_class, seed, mains_freq)


def _waveform(profile: LoadProfile, amp: float, t: np.ndarray) -> np.ndarray:
    """Harmonic sum at phase positions ``t`` measured in fundamental cycles."""
    out = np.zeros_like(t)
    for k, m in profile.harmonic_levels.items():
        out += m * np.sin(2 * np.pi * k * t + profile.harmonic_phases.get(k, 0.0))
    return amp * out


def gen_instance(profile: LoadProfile, rng: np.random.Generator, n: int = CYCLE_LEN) -> np.ndarray:
    u = rng.uniform(-1.0, 1.0)
    amp = profile.amplitude * (1.0 + profile.jitter * u)
    noise = rng.standard_normal(n) * profile.noise_sigma
    return _waveform(profile, amp, np.arange(n) / n) + noise


def gen_record(
    profile: LoadProfile,
    rng: np.random.Generator,
    samples_per_cycle: float,
    n_cycles: float = 3.0,
    phase: float | None = None,
) -> np.ndarray:
    """Multi-cycle record at an arbitrary rate, starting at a random (or given) phase."""
    if phase is None:
        phase = rng.uniform(0.0, 1.0)
    u = rng.uniform(-1.0, 1.0)
    amp = profile.amplitude * (1.0 + profile.jitter * u)
    n = int(round(samples_per_cycle * n_cycles))
    t = phase + np.arange(n) / samples_per_cycle
    return _waveform(profile, amp, t) + rng.standard_normal(n) * profile.noise_sigma


def aggregate(instances) -> np.ndarray:
    arrays = [np.asarray(c, dtype=np.float64) for c in instances]
    if not arrays:
        raise LengthMismatch("nothing to aggregate")
    if len({a.shape for a in arrays}) != 1:
        raise LengthMismatch(f"waveform shapes differ: {sorted({a.shape for a in arrays})}")
    return np.sum(arrays, axis=0)


def instance_rng(seed: int, class_index: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, class_index, index])


def build_corpus(spec: SynthDatasetSpec) -> list:
    """All instances as ``(waveform[80], label)`` in class-major order."""
    out = []
    for ci, profile in enumerate(spec.classes):
        for i in range(spec.instances_per_class):
            out.append((gen_instance(profile, instance_rng(spec.seed, ci, i)), profile.class_name))
    return out


def masking_pairs(spec: SynthDatasetSpec) -> tuple:
    """(strongest resistive profile, switching profiles sorted weakest first)."""
    resistive = [p for p in spec.classes if p.kind == "resistive"]
    switching = [p for p in spec.classes if p.kind == "switching"]
    if not resistive or not switching:
        raise ValueError("masking needs at least one resistive and one switching class")
    masker = max(resistive, key=lambda p: p.amplitude)
    return masker, sorted(switching, key=lambda p: p.amplitude)


def build_masking_corpus(spec: SynthDatasetSpec, instances_per_class: int | None = None) -> list:
    """Aggregates of the strongest resistive load with each switching load.

    Each aggregate is labeled with the switching (masked) class.
    """
    masker, targets = masking_pairs(spec)
    n = instances_per_class or spec.instances_per_class
    mi = spec.classes.index(masker)
    out = []
    for target in targets:
        ti = spec.classes.index(target)
        for i in range(n):
            rng = np.random.default_rng([spec.seed, mi, ti, i])
            out.append((aggregate([gen_instance(masker, rng), gen_instance(target, rng)]), target.class_name))
    return out


def write_corpus(corpus, out_dir, mains_freq: float, name: str = "synthetic", cycles: int = 2) -> Path:
    """Write each cycle (tiled ``cycles`` times) as a CSV plus ``manifest.json``."""
    out_dir = Path(out_dir)
    (out_dir / "waveforms").mkdir(parents=True, exist_ok=True)
    labels, records = [], []
    counters = {}
    for wave, label in corpus:
        if label not in labels:
            labels.append(label)
        i = counters.get(label, 0)
        counters[label] = i + 1
        rec_id = f"{label}_{i:04d}"
        rel = f"waveforms/{rec_id}.csv"
        write_waveform_csv(out_dir / rel, np.tile(wave, cycles))
        records.append({"id": rec_id, "path": rel, "label": label})
    manifest = {
        "name": name,
        "mains_freq": mains_freq,
        "sample_rate": mains_freq * CYCLE_LEN,
        "classes": labels,
        "records": records,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path
