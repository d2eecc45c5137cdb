"""Minimal float64 tensor engine with reverse-mode differentiation."""

from .layers import Conv2d, Dense, Module
from .optim import SGD, Adam, make_optimizer
from .tensor import (
    Tensor,
    add,
    channel_split,
    check_finite,
    concat,
    conv2d,
    global_avg_pool,
    linear,
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

__all__ = [
    "Adam",
    "Conv2d",
    "Dense",
    "Module",
    "SGD",
    "Tensor",
    "add",
    "channel_split",
    "check_finite",
    "concat",
    "conv2d",
    "global_avg_pool",
    "linear",
    "make_optimizer",
    "maxpool2",
    "mul",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "softmax_crossentropy",
    "transpose",
    "upsample2",
]
