"""Finite-difference gradient suites for every layer and composite block.

Each case builds a small random problem, reduces the output to a scalar
through a fixed random projection (so every output element matters) and
compares analytic against central-difference gradients.
"""

from __future__ import annotations

import numpy as np

from ..nn.gradcheck import check
from ..nn.tensor import (
    Tensor,
    conv2d,
    global_avg_pool,
    linear,
    maxpool2,
    mul,
    relu,
    sigmoid,
    softmax_crossentropy,
    tsum,
    upsample2,
)
from ..recognizer import AttentionGate, ChannelAttention, MfdemBlock, RecognizerConfig, RecognizerModel

TOLERANCE = 1e-4
H_LAYER = 1e-5
H_MODEL = 1e-6  # smaller step: fewer maxpool/ReLU switches crossed in a deep net
H_MODEL_MAX = 1e-3  # cap for groups whose gradients sit near the roundoff floor
MAX_KINK_FRACTION = 0.05


def _t(rng, shape, scale=1.0):
    return Tensor(rng.standard_normal(shape) * scale, requires_grad=True)


def _project(out: Tensor, rng) -> callable:
    r = rng.standard_normal(out.shape)
    return lambda t: tsum(mul(t, r))


def _params(module) -> dict:
    return {name: p for name, p in module.named_parameters()}


def _case(fn, inputs: dict, rng, h=H_LAYER, max_entries=None, seed=0) -> float:
    proj = _project(fn(), rng)
    errs = check(lambda: proj(fn()), inputs, h=h, max_entries=max_entries, seed=seed)
    return max(errs.values())


def layer_cases(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    out = {}

    for k in (1, 3, 5, 7):
        x, w, b = _t(rng, (3, 2, 6, 6)), _t(rng, (4, 3, k, k), 0.3), _t(rng, (4,))
        out[f"conv2d k={k}"] = _case(lambda: conv2d(x, w, b), {"x": x, "w": w, "b": b}, rng)

    # distinct, well-separated values so the argmax never flips under perturbation
    vals = rng.permutation(2 * 2 * 6 * 6).astype(float).reshape(2, 2, 6, 6) * 0.1
    x = Tensor(vals, requires_grad=True)
    out["maxpool2"] = _case(lambda: maxpool2(x), {"x": x}, rng, h=1e-3)

    x = _t(rng, (3, 2, 4, 5))
    out["upsample2"] = _case(lambda: upsample2(x), {"x": x}, rng)

    x, w, b = _t(rng, (5, 7)), _t(rng, (4, 7)), _t(rng, (4,))
    out["dense"] = _case(lambda: linear(x, w, b), {"x": x, "w": w, "b": b}, rng)

    # keep inputs away from the kink at zero
    v = rng.uniform(0.1, 1.0, (4, 6)) * rng.choice([-1.0, 1.0], (4, 6))
    x = Tensor(v, requires_grad=True)
    out["relu"] = _case(lambda: relu(x), {"x": x}, rng)

    x = _t(rng, (4, 6), 3.0)
    out["sigmoid"] = _case(lambda: sigmoid(x), {"x": x}, rng)

    x = _t(rng, (3, 2, 5, 5))
    out["global_avg_pool"] = _case(lambda: global_avg_pool(x), {"x": x}, rng)

    logits = _t(rng, (6, 5), 2.0)
    labels = rng.integers(0, 5, 6)
    errs = check(lambda: softmax_crossentropy(logits, labels), {"logits": logits}, h=1e-3)
    out["softmax_crossentropy"] = max(errs.values())
    return out


def block_cases(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed + 1)
    out = {}

    ca = ChannelAttention(8, 4, rng)
    y = _t(rng, (8, 2, 4, 4))
    out["channel_attention"] = _case(lambda: ca(y), {"y": y, **_params(ca)}, rng)

    blk = MfdemBlock(3, 8, rng)
    x = _t(rng, (3, 2, 6, 6))
    out["mfdem"] = _case(lambda: blk(x), {"x": x, **_params(blk)}, rng)

    for per_channel in (False, True):
        ag = AttentionGate(4, rng, per_channel)
        f_l, f_h = _t(rng, (4, 2, 5, 5)), _t(rng, (4, 2, 5, 5))
        tag = "attention_gate" + (" per-channel" if per_channel else "")
        out[tag] = _case(lambda: ag(f_l, f_h), {"f_l": f_l, "f_h": f_h, **_params(ag)}, rng)
    return out


def model_case(seed: int = 0, max_entries: int = 12, stats: dict | None = None) -> dict:
    """Thinned full model (8 channels per stage), loss = softmax cross-entropy.

    Entries whose perturbation flips a ReLU or max-pool branch are screened
    out; more than MAX_KINK_FRACTION of them counts as a failure.
    """
    stats = {} if stats is None else stats
    rng = np.random.default_rng(seed + 2)
    model = RecognizerModel(RecognizerConfig(num_classes=3, channels=(8, 8, 8, 8)), seed=seed)
    # zero-initialised biases park all-zero ReLU outputs exactly on the next kink,
    # where central differences disagree with any subgradient; move them off it
    for name, p in model.named_parameters():
        if name.endswith("bias"):
            p.data[...] = rng.normal(0.0, 0.1, p.shape)
    x = Tensor(rng.uniform(0, 1, (2, 3, 40, 40)), requires_grad=True)
    labels = np.array([0, 2])
    tensors = {"input": x, **_params(model)}
    errs = check(
        lambda: softmax_crossentropy(model.forward(x), labels),
        tensors,
        h=H_MODEL,
        max_entries=max_entries,
        seed=seed,
        screen=True,
        h_max=H_MODEL_MAX,
        stats=stats,
    )
    checked = sum(s[0] for s in stats.values())
    skipped = sum(s[1] for s in stats.values())
    err = max(errs.values())
    if skipped > MAX_KINK_FRACTION * checked:
        err = float("inf")
    return {"thinned model": err}


def run_all(seed: int = 0, include_model: bool = True) -> dict:
    results = {**layer_cases(seed), **block_cases(seed)}
    if include_model:
        results.update(model_case(seed))
    return results
