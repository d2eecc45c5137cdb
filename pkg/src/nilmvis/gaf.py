"""Gramian angular (sine-difference) field encoding of the feature triple into an RGB image."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .signal import FeatureTriple


@dataclass(frozen=True)
class PolarSequence:
    phi: np.ndarray
    radius: np.ndarray  # kept for completeness; the Gramian uses phi only


def polar_transform(s) -> PolarSequence:
    s = np.asarray(s, dtype=np.float64)
    n = np.arange(s.size, dtype=np.float64)
    return PolarSequence(np.arctan(s), np.sqrt(s * s + n * n))


def gramian_difference(p: PolarSequence) -> np.ndarray:
    """g[i, j] = sin(phi[i] - phi[j]); antisymmetric with a zero diagonal."""
    return np.sin(np.subtract.outer(p.phi, p.phi))


def to_bytes(g) -> np.ndarray:
    """|g| * 255, rounded half away from zero, clamped to 0..255."""
    v = np.floor(np.abs(g) * 255.0 + 0.5)
    return np.clip(v, 0, 255).astype(np.uint8)


def fuse_rgb(g_a, g_d, g_h) -> np.ndarray:
    """Stack the three Gramians as R, G, B; returns a (H, W, 3) uint8 array."""
    shapes = {np.shape(g) for g in (g_a, g_d, g_h)}
    if len(shapes) != 1:
        raise ValueError(f"Gramian shapes differ: {sorted(shapes)}")
    return np.stack([to_bytes(g_a), to_bytes(g_d), to_bytes(g_h)], axis=-1)


def encode(features: FeatureTriple) -> np.ndarray:
    g = [gramian_difference(polar_transform(s)) for s in (features.s_a, features.s_d, features.s_h)]
    return fuse_rgb(*g)


def save_png(image, path) -> None:
    img = np.asarray(image, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {img.shape}")
    Image.fromarray(np.ascontiguousarray(img)).save(Path(path), format="PNG")


def load_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)
