"""U-shape load recognition network built from multi-scale dense extraction blocks.

Down path: three MFDEM blocks, each followed by 2x max pooling (40 -> 20 -> 10 -> 5).
Bottleneck: one MFDEM at 5x5. Up path: three stages of 2x upsampling, a 1x1
projection to the skip's channel count, an attention gate driven by the skip
feature, addition with the skip, and an MFDEM. Head: global average pooling,
one dense layer, softmax.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BadImageShape, BadLabel, CheckpointError, EmptyDataset, ShapeMismatch
from .nn import checkpoint
from .nn.layers import Conv2d, Dense, Module
from .nn.optim import make_optimizer
from .nn.tensor import (
    Tensor,
    channel_split,
    check_finite,
    concat,
    global_avg_pool,
    maxpool2,
    mul,
    relu,
    reshape,
    sigmoid,
    softmax,
    softmax_crossentropy,
    transpose,
    upsample2,
)

log = logging.getLogger(__name__)

IMAGE_SHAPE = (40, 40, 3)


@dataclass(frozen=True)
class RecognizerConfig:
    num_classes: int = 12
    channels: tuple = (16, 32, 64, 128)
    reduction: int = 4
    branch_kernels: tuple = (3, 5, 7)
    attention_gates: bool = True
    per_channel_gate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        object.__setattr__(self, "branch_kernels", tuple(int(k) for k in self.branch_kernels))
        if len(self.channels) != 4:
            raise ValueError("channel plan needs 3 down stages and a bottleneck")
        if any(c % 4 for c in self.channels):
            raise ValueError("every stage width must be divisible by 4")
        if len(self.branch_kernels) != 3:
            raise ValueError("MFDEM has exactly three branch convolutions")
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channels"] = list(self.channels)
        d["branch_kernels"] = list(self.branch_kernels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RecognizerConfig":
        return cls(**d)


class ChannelAttention(Module):
    def __init__(self, channels: int, reduction: int, rng):
        hidden = max(1, channels // reduction)
        self.fc1 = Dense(channels, hidden, rng)
        self.fc2 = Dense(hidden, channels, rng)

    def __call__(self, y: Tensor) -> Tensor:
        """Per-channel weights in (0, 1), shape (N, C)."""
        return sigmoid(self.fc2(relu(self.fc1(global_avg_pool(y)))))


class MfdemBlock(Module):
    def __init__(self, in_ch: int, out_ch: int, rng, kernels=(3, 5, 7), reduction: int = 4):
        if out_ch % 4:
            raise ValueError(f"MFDEM width {out_ch} is not divisible by 4")
        sub = out_ch // 4
        self.entry_conv = Conv2d(in_ch, out_ch, 1, rng)
        self.branch_convs = [Conv2d(sub, sub, k, rng) for k in kernels]
        self.fuse_conv = Conv2d(out_ch, out_ch, 1, rng)
        self.attention = ChannelAttention(out_ch, reduction, rng)

    def __call__(self, x: Tensor, weights: list | None = None) -> Tensor:
        a = channel_split(relu(self.entry_conv(x)), 4)
        b = [a[0]]
        for conv, a_i in zip(self.branch_convs, a[1:]):
            b.append(relu(conv(b[-1] + a_i)))
        y = relu(self.fuse_conv(concat(b)))
        w = self.attention(y)
        if weights is not None:
            weights.append(w.data)
        return mul(y, reshape(transpose(w, (1, 0)), w.shape[::-1] + (1, 1)))


class AttentionGate(Module):
    def __init__(self, channels: int, rng, per_channel: bool = False):
        inter = max(1, channels // 2)
        self.conv_l = Conv2d(channels, inter, 1, rng)
        self.conv_h = Conv2d(channels, inter, 1, rng)
        self.conv_psi = Conv2d(inter, channels if per_channel else 1, 1, rng)

    def weights(self, f_l: Tensor, f_h: Tensor) -> Tensor:
        return sigmoid(self.conv_psi(relu(self.conv_l(f_l) + self.conv_h(f_h))))

    def __call__(self, f_l: Tensor, f_h: Tensor, weights: list | None = None) -> Tensor:
        if f_l.shape != f_h.shape:
            raise ShapeMismatch(f"gate inputs differ: {f_l.shape} vs {f_h.shape}")
        w = self.weights(f_l, f_h)
        if weights is not None:
            weights.append(w.data)
        return mul(f_h, w)


class RecognizerModel(Module):
    def __init__(self, config: RecognizerConfig | None = None, seed: int = 42):
        self.config = config or RecognizerConfig()
        cfg = self.config
        rng = np.random.default_rng(seed)
        c1, c2, c3, cb = cfg.channels
        kw = dict(kernels=cfg.branch_kernels, reduction=cfg.reduction)
        self.down = [MfdemBlock(3, c1, rng, **kw), MfdemBlock(c1, c2, rng, **kw), MfdemBlock(c2, c3, rng, **kw)]
        self.bottleneck = MfdemBlock(c3, cb, rng, **kw)
        self.up_proj = [Conv2d(cb, c3, 1, rng), Conv2d(c3, c2, 1, rng), Conv2d(c2, c1, 1, rng)]
        if cfg.attention_gates:
            self.gates = [AttentionGate(c, rng, cfg.per_channel_gate) for c in (c3, c2, c1)]
        else:
            self.gates = []
        self.up = [MfdemBlock(c3, c3, rng, **kw), MfdemBlock(c2, c2, rng, **kw), MfdemBlock(c1, c1, rng, **kw)]
        self.head = Dense(c1, cfg.num_classes, rng)

    def forward(self, x: Tensor, trace: list | None = None, weights: list | None = None) -> Tensor:
        """x: (N, 3, 40, 40) floats in [0, 1]; returns logits (N, K).

        ``trace`` collects (stage, per-example (C, H, W) shape); ``weights``
        collects every channel-attention and gate weight array in evaluation order.
        """
        if x.data.ndim != 4 or x.shape[1:] != (3, 40, 40):
            raise BadImageShape(f"expected (N, 3, 40, 40) input, got {x.shape}")

        def note(tag, t):
            if trace is not None:
                trace.append((tag, t.shape[:1] + t.shape[2:] if t.data.ndim == 4 else t.shape[1:]))
            return t

        h = note("input", transpose(x, (1, 0, 2, 3)))
        skips = []
        for i, block in enumerate(self.down):
            h = note(f"down{i}", block(h, weights))
            skips.append(h)
            h = note(f"pool{i}", maxpool2(h))
        h = note("bottleneck", self.bottleneck(h, weights))
        for i in range(3):
            h = note(f"upsample{i}", self.up_proj[i](upsample2(h)))
            f_l = skips[-1 - i]
            f_n = self.gates[i](f_l, h, weights) if self.gates else h
            h = note(f"up{i}", self.up[i](f_n + f_l, weights))
        return check_finite(note("logits", self.head(global_avg_pool(h))))

    def checkpoint_config(self, class_names=None) -> dict:
        cfg = {"arch": self.config.to_dict()}
        if class_names is not None:
            cfg["class_names"] = list(class_names)
        return cfg

    def save(self, path, class_names=None) -> None:
        checkpoint.save(path, self.checkpoint_config(class_names), ((n, p.data) for n, p in self.named_parameters()))

    @classmethod
    def load(cls, path):
        """Returns (model, class_names or None)."""
        cfg, params = checkpoint.load(path)
        model = cls(RecognizerConfig.from_dict(cfg["arch"]))
        own = list(model.named_parameters())
        if [n for n, _ in own] != [n for n, _ in params]:
            raise CheckpointError("checkpoint parameters do not match the architecture")
        for (_, p), (_, arr) in zip(own, params):
            if p.data.shape != arr.shape:
                raise CheckpointError("parameter shape mismatch")
            p.data[...] = arr
        return model, cfg.get("class_names")


def images_to_input(images) -> np.ndarray:
    """(N, 40, 40, 3) uint8 -> (N, 3, 40, 40) float64 scaled by 1/255."""
    arr = np.asarray(images)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[1:] != IMAGE_SHAPE:
        raise BadImageShape(f"expected images of shape {IMAGE_SHAPE}, got {arr.shape[1:]}")
    return np.ascontiguousarray(arr.transpose(0, 3, 1, 2), dtype=np.float64) / 255.0


def predict_logits(model: RecognizerModel, images, batch: int = 64) -> np.ndarray:
    x = images_to_input(images)
    out = [model.forward(Tensor(x[i : i + batch])).data for i in range(0, len(x), batch)]
    return np.concatenate(out, axis=0)


def predict_proba(model: RecognizerModel, images, batch: int = 64) -> np.ndarray:
    return softmax(predict_logits(model, images, batch))


def classify(model: RecognizerModel, image):
    """Returns (class index, softmax confidence) for one (40, 40, 3) image."""
    p = predict_proba(model, np.asarray(image)[None])[0]
    k = int(np.argmax(p))
    return k, float(p[k])


@dataclass
class TrainConfig:
    epochs: int = 30
    batch: int = 16
    lr: float = 1e-3
    seed: int = 42
    optimizer: str = "adam"


@dataclass
class TrainResult:
    loss_curve: list = field(default_factory=list)
    initial_loss: float = float("nan")
    train_accuracy: float = float("nan")


def train(model: RecognizerModel, images, labels, config: TrainConfig | None = None, progress=None) -> TrainResult:
    """Minibatch softmax cross-entropy training; deterministic for a fixed seed."""
    config = config or TrainConfig()
    x = images_to_input(images)
    y = np.asarray(labels, dtype=np.int64)
    if len(x) == 0:
        raise EmptyDataset("no training examples")
    if len(y) != len(x):
        raise BadLabel(f"{len(y)} labels for {len(x)} images")
    if np.any(y < 0) or np.any(y >= model.config.num_classes):
        raise BadLabel(f"labels must lie in [0, {model.config.num_classes})")

    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    opt = make_optimizer(config.optimizer, params, config.lr)
    result = TrainResult()
    for epoch in range(config.epochs):
        order = rng.permutation(len(x))
        total, count = 0.0, 0
        for start in range(0, len(x), config.batch):
            idx = order[start : start + config.batch]
            loss = softmax_crossentropy(model.forward(Tensor(x[idx])), y[idx])
            check_finite(loss, "loss")
            value = float(loss.data)
            if epoch == 0 and start == 0:
                result.initial_loss = value
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += value * len(idx)
            count += len(idx)
        result.loss_curve.append(total / count)
        log.info("epoch %d/%d loss %.5f", epoch + 1, config.epochs, result.loss_curve[-1])
        if progress is not None:
            progress(epoch, result.loss_curve[-1])
    pred = predict_logits(model, images).argmax(axis=1)
    result.train_accuracy = float(np.mean(pred == y))
    return result
