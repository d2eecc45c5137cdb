"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

The end-to-end runs share one session-scoped training run of the default
protocol (criteria 4, 6 and 8 all need it), so the whole file takes roughly
an hour on one CPU core.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from nilmvis import synth
from nilmvis.gaf import encode
from nilmvis.harness import gradsuite
from nilmvis.harness.ablation import KERNEL_VARIANTS, _run_variants
from nilmvis.harness.dataset import dataset_from_corpus, ingest, load_manifest
from nilmvis.harness.evaluate import split_70_30
from nilmvis.harness.pipeline import model_config_for, run_pipeline
from nilmvis.recognizer import TrainConfig
from nilmvis.signal import CurrentCycle, FeatureTriple, dwt_level1, harmonic_content, harmonic_spectrum

FIXTURE = Path(__file__).parent / "fixtures" / "plaid_mini"


@pytest.fixture
def verdict(capsys):
    def say(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}")
        assert ok, detail

    return say


def dft_matrix(n):
    """O(N^2) DFT with the 1/N factor and n = 1..N indexing, built from cos/sin."""
    k = np.arange(n // 2 + 1)[:, None]
    m = np.arange(1, n + 1)[None, :]
    ang = 2 * np.pi * k * m / n
    return (np.cos(ang) - 1j * np.sin(ang)) / n, m.ravel() % n


@pytest.fixture(scope="session")
def default_dataset():
    t0 = time.perf_counter()
    ds = dataset_from_corpus(synth.build_corpus(synth.default_spec()))
    ds.build_seconds = time.perf_counter() - t0
    return ds


@pytest.fixture(scope="session")
def default_run(default_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("run_a")
    t0 = time.perf_counter()
    res = run_pipeline(default_dataset, TrainConfig(), out_dir=out)
    return res, out, default_dataset.build_seconds + time.perf_counter() - t0


def test_criterion_1_signal_identities(verdict):
    rng = np.random.default_rng(1)
    W, idx = dft_matrix(80)
    worst = dict(energy=0.0, norm=0.0, dft=0.0, invariance=0.0)
    for _ in range(1000):
        x = rng.normal(size=80) * rng.uniform(0.01, 10)
        s_a, s_d = dwt_level1(CurrentCycle(x))
        e = x @ x
        worst["energy"] = max(worst["energy"], abs(s_a @ s_a + s_d @ s_d - e) / e)
        spec = harmonic_spectrum(CurrentCycle(x))
        worst["dft"] = max(worst["dft"], np.abs(spec.r - W @ x[idx]).max())
        s_h = harmonic_content(spec)
        worst["norm"] = max(worst["norm"], abs(s_h.sum() - 1.0))
        alpha = rng.uniform(1e-3, 1e3)
        s_h2 = harmonic_content(harmonic_spectrum(CurrentCycle(alpha * x)))
        worst["invariance"] = max(worst["invariance"], np.abs(s_h2 - s_h).max())
    ok = worst["energy"] < 1e-9 and worst["norm"] < 1e-9 and worst["dft"] < 1e-12 and worst["invariance"] < 1e-12
    verdict(1, ok, " ".join(f"{k}={v:.2e}" for k, v in worst.items()))


def test_criterion_2_gaf_structure(verdict):
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(1000):
        f = FeatureTriple(rng.normal(size=40) * 5, rng.normal(size=40), rng.dirichlet(np.ones(40)))
        img = encode(f)
        again = encode(FeatureTriple(f.s_a.copy(), f.s_d.copy(), f.s_h.copy()))
        diag_zero = all(not np.diag(img[..., c]).any() for c in range(3))
        symmetric = all(np.array_equal(img[..., c], img[..., c].T) for c in range(3))
        if not (diag_zero and symmetric and img.tobytes() == again.tobytes()):
            bad += 1
    verdict(2, bad == 0, f"{bad} of 1000 images violate zero-diagonal/symmetry/determinism")


def test_criterion_3_gradient_integrity(verdict):
    t0 = time.perf_counter()
    results = gradsuite.run_all(seed=0)
    elapsed = time.perf_counter() - t0
    worst_name = max(results, key=results.get)
    ok = all(v < gradsuite.TOLERANCE for v in results.values()) and elapsed < 120
    verdict(3, ok, f"{len(results)} checks, worst {worst_name} {results[worst_name]:.2e}, {elapsed:.0f} s")


def test_criterion_4_synthetic_recognition(verdict, default_run):
    res, _, elapsed = default_run
    r = res.report
    ok = r.accuracy >= 0.95 and r.f1 >= 0.94 and elapsed <= 900
    verdict(4, ok, f"accuracy {r.accuracy:.4f} macro-F1 {r.f1:.4f} in {elapsed:.0f} s")


def test_criterion_5_masking(verdict):
    spec = synth.default_spec()
    ds = dataset_from_corpus(synth.build_masking_corpus(spec))
    # same number of optimizer steps as the default protocol: 4 classes give a third of its training set
    n_default = len(split_70_30(np.repeat(np.arange(len(spec.classes)), spec.instances_per_class))[0])
    n_masking = len(split_70_30(ds.labels)[0])
    base = TrainConfig()
    epochs = round(base.epochs * n_default / n_masking)
    res = run_pipeline(ds, replace(base, epochs=epochs))
    acc = res.report.accuracy
    verdict(5, acc >= 0.90, f"masked-class accuracy {acc:.4f} on {res.test_idx.size} held-out aggregates ({epochs} epochs)")


def test_criterion_6_ablation_directions(verdict, default_dataset, default_run):
    # the default run already is the multi-scale, AG-on configuration under the same split and seeds
    res, _, _ = default_run
    cfg = model_config_for(default_dataset)
    variants = {n: replace(cfg, branch_kernels=k) for n, k in KERNEL_VARIANTS.items() if n != "multi-scale"}
    variants["w/o AG"] = replace(cfg, attention_gates=False)
    rows = {r.name: r.report.accuracy for r in _run_variants(default_dataset, variants, TrainConfig())}
    ours = res.report.accuracy
    singles = [rows[n] for n in KERNEL_VARIANTS if n != "multi-scale"]
    ok = ours >= max(singles) and ours >= rows["w/o AG"]
    table = " ".join(f"{n}={a:.4f}" for n, a in rows.items())
    verdict(6, ok, f"multi-scale/AG-on={ours:.4f} {table}")


def test_criterion_7_plaid_fixture(verdict, tmp_path):
    ds = ingest(load_manifest(FIXTURE / "manifest.json")).dataset
    res = run_pipeline(ds, TrainConfig(), out_dir=tmp_path)
    emitted = all((tmp_path / n).is_file() for n in ("report.json", "confusion.csv", "confusion.png", "model.ckpt"))
    ok = len(ds) == 30 and emitted and not math.isnan(res.report.accuracy)
    verdict(7, ok, f"{len(ds)} records ingested, report emitted, accuracy {res.report.accuracy:.4f}")


def test_criterion_8_hermeticity(verdict, default_dataset, default_run, tmp_path):
    _, out_a, _ = default_run
    run_pipeline(default_dataset, TrainConfig(), out_dir=tmp_path)
    files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path) for p in tmp_path.rglob("*") if p.is_file())
    differing = [str(p) for p in files_a if (out_a / p).read_bytes() != (tmp_path / p).read_bytes()] if files_a == files_b else ["file lists"]
    n_png = sum(1 for p in files_a if p.suffix == ".png")
    verdict(8, not differing, f"{len(files_a)} files compared ({n_png} PNGs), {len(differing)} differ")
