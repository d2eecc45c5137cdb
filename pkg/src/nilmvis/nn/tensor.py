"""Reverse-mode automatic differentiation over float64 numpy arrays.

Feature maps are stored channel-major, ``(C, N, H, W)``, so a convolution is
one GEMM over an im2col buffer with no layout shuffles; vectors are batch-major
``(N, F)``. Every op records a closure that pushes the output
gradient into its parents; ``Tensor.backward`` replays them in reverse
topological order.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import BadLabel, NumericError, OddSpatialDim, ShapeMismatch

_LO = np.nextafter(0.0, 1.0)
_HI = np.nextafter(1.0, 0.0)

_switch_log: list | None = None


class record_switches:
    """Context manager collecting every ReLU mask and max-pool selection made inside it.

    Two forward passes took the same piecewise-linear branch iff their logs match.
    """

    def __enter__(self) -> list:
        global _switch_log
        self._prev = _switch_log
        _switch_log = self.log = []
        return self.log

    def __exit__(self, *exc):
        global _switch_log
        _switch_log = self._prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward=None, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.asarray(grad, dtype=np.float64)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                if node._parents:
                    node.grad = None  # intermediate; release memory

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def sum(self):
        return tsum(self)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t: Tensor, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad += g


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _node(data, parents, backward):
    req = any(p.requires_grad for p in parents)
    return Tensor(data, req, parents if req else (), backward if req else None)


def check_finite(t: Tensor, where: str = "forward"):
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite values in {where} output")
    return t


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    return _node(a.data + b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def backward(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.shape))

    return _node(a.data * b.data, (a, b), backward)


def tsum(x: Tensor) -> Tensor:
    def backward(g):
        _accum(x, np.broadcast_to(g, x.shape))

    return _node(np.sum(x.data), (x,), backward)


def reshape(x: Tensor, shape) -> Tensor:
    def backward(g):
        _accum(x, g.reshape(x.shape))

    return _node(x.data.reshape(shape), (x,), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    if _switch_log is not None:
        _switch_log.append(mask)

    def backward(g):
        _accum(x, g * mask)

    return _node(x.data * mask, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    s = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    ds = s * (1.0 - s)

    def backward(g):
        _accum(x, g * ds)

    # keep the output strictly inside (0, 1) even where tanh saturates
    return _node(np.clip(s, _LO, _HI), (x,), backward)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x: (N, F_in), w: (F_out, F_in), b: (F_out,)."""
    if x.data.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"linear: input {x.shape} vs weight {w.shape}")
    out = x.data @ w.data.T
    if b is not None:
        out = out + b.data
    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        if x.requires_grad:
            _accum(x, g @ w.data)
        if w.requires_grad:
            _accum(w, g.T @ x.data)
        if b is not None and b.requires_grad:
            _accum(b, g.sum(axis=0))

    return _node(out, parents, backward)


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(C, N, H, W) -> (C*k*k, N*H*W) with zero same-padding."""
    c, n, h, w = x.shape
    if k == 1:
        return x.reshape(c, n * h * w)
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))  # c n h w k k
    return np.ascontiguousarray(win.transpose(0, 4, 5, 1, 2, 3)).reshape(c * k * k, n * h * w)


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Stride-1 cross-correlation with same padding; x is (C, N, H, W), w is (O, C, k, k)."""
    if x.data.ndim != 4:
        raise ShapeMismatch(f"conv2d expects (C, N, H, W), got {x.shape}")
    c, n, h, wd = x.shape
    o, ci, k, k2 = w.shape
    if ci != c:
        raise ShapeMismatch(f"conv2d: input has {c} channels, kernel expects {ci}")
    if k != k2 or k % 2 == 0:
        raise ShapeMismatch(f"conv2d: kernel must be square and odd, got {k}x{k2}")
    xd = np.ascontiguousarray(x.data)
    w2 = w.data.reshape(o, c * k * k)
    cols = _im2col(xd, k)
    out = w2 @ cols
    if b is not None:
        out += b.data[:, None]
    parents = (x, w) if b is None else (x, w, b)

    def backward(g):
        g = np.ascontiguousarray(g)
        g2 = g.reshape(o, n * h * wd)
        if w.requires_grad:
            _accum(w, (g2 @ cols.T).reshape(w.shape))
        if b is not None and b.requires_grad:
            _accum(b, g2.sum(axis=1))
        if x.requires_grad:
            if k == 1:
                dx = w2.T @ g2
            else:
                # stride-1 same padding: the input gradient is the output gradient
                # correlated with the flipped, channel-transposed kernel
                wt = w.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(c, o * k * k)
                dx = wt @ _im2col(g, k)
            _accum(x, dx.reshape(x.shape))

    return _node(out.reshape(o, n, h, wd), parents, backward)


def maxpool2(x: Tensor) -> Tensor:
    """2x2 max pooling, stride 2, over the last two axes."""
    c, n, h, w = x.shape
    if h % 2 or w % 2:
        raise OddSpatialDim(f"maxpool2 needs even spatial dims, got {h}x{w}")
    blocks = x.data.reshape(c, n, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(c, n, h // 2, w // 2, 4)
    arg = blocks.argmax(axis=-1)
    if _switch_log is not None:
        _switch_log.append(arg)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        routed = np.zeros((c, n, h // 2, w // 2, 4))
        np.put_along_axis(routed, arg[..., None], g[..., None], axis=-1)
        dx = routed.reshape(c, n, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(x.shape)
        _accum(x, dx)

    return _node(out, (x,), backward)


def upsample2(x: Tensor) -> Tensor:
    """Nearest-neighbour 2x upsampling over the last two axes."""
    c, n, h, w = x.shape
    out = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)

    def backward(g):
        _accum(x, g.reshape(c, n, h, 2, w, 2).sum(axis=(3, 5)))

    return _node(out, (x,), backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """(C, N, H, W) -> (N, C)."""
    c, n, h, w = x.shape

    def backward(g):
        _accum(x, np.broadcast_to(g.T[:, :, None, None] / (h * w), x.shape))

    return _node(x.data.mean(axis=(2, 3)).T, (x,), backward)


def transpose(x: Tensor, axes) -> Tensor:
    inverse = np.argsort(axes)

    def backward(g):
        _accum(x, g.transpose(inverse))

    return _node(x.data.transpose(axes), (x,), backward)


def concat(xs, axis: int = 0) -> Tensor:
    sizes = [t.shape[axis] for t in xs]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(xs, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _accum(t, g[tuple(idx)])

    return _node(np.concatenate([t.data for t in xs], axis=axis), tuple(xs), backward)


def channel_split(x: Tensor, parts: int) -> list:
    """Split a (C, N, H, W) map into ``parts`` equal channel groups."""
    c = x.shape[0]
    if c % parts:
        raise ShapeMismatch(f"cannot split {c} channels into {parts} equal parts")
    step = c // parts
    out = []
    for i in range(parts):
        lo, hi = i * step, (i + 1) * step

        def backward(g, lo=lo, hi=hi):
            if x.grad is None:
                x.grad = np.zeros(x.shape)
            x.grad[lo:hi] += g

        out.append(_node(x.data[lo:hi], (x,), backward))
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_crossentropy(logits: Tensor, labels) -> Tensor:
    """Mean of -log softmax(logits)[label] over the batch."""
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    n, k = logits.shape
    if k < 2:
        raise ShapeMismatch("softmax cross-entropy needs at least 2 classes")
    if labels.size != n:
        raise ShapeMismatch(f"{labels.size} labels for a batch of {n}")
    if np.any(labels < 0) or np.any(labels >= k):
        raise BadLabel(f"labels must lie in [0, {k})")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    logp = z[np.arange(n), labels] - logsum
    p = np.exp(z - logsum[:, None])

    def backward(g):
        d = p.copy()
        d[np.arange(n), labels] -= 1.0
        _accum(logits, g * d / n)

    return _node(-logp.mean(), (logits,), backward)
