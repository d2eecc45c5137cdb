"""Binary checkpoint container.

Layout (all integers little-endian)::

    magic      8 bytes   b"NILMVIS\\x00"
    version    uint32
    cfg_len    uint32
    config     cfg_len bytes of UTF-8 JSON (sorted keys); includes "params":
               a list of [name, shape] in declaration order
    data       float32 LE, parameters concatenated in declaration order
    crc32      uint32 over every preceding byte
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

MAGIC = b"NILMVIS\x00"
VERSION = 1


def dumps(config: dict, named_params) -> bytes:
    named_params = list(named_params)
    cfg = dict(config)
    cfg["params"] = [[name, list(arr.shape)] for name, arr in named_params]
    cfg_bytes = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = [MAGIC, struct.pack("<II", VERSION, len(cfg_bytes)), cfg_bytes]
    for _, arr in named_params:
        body.append(np.asarray(arr, dtype="<f4").tobytes())
    blob = b"".join(body)
    return blob + struct.pack("<I", zlib.crc32(blob))


def loads(blob: bytes):
    """Returns (config, [(name, float64 array), ...])."""
    if len(blob) < len(MAGIC) + 12 or blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a nilmvis checkpoint")
    (crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) != crc:
        raise CheckpointError("checksum mismatch")
    version, cfg_len = struct.unpack("<II", blob[len(MAGIC) : len(MAGIC) + 8])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = len(MAGIC) + 8
    cfg = json.loads(blob[pos : pos + cfg_len].decode("utf-8"))
    pos += cfg_len
    params = []
    for name, shape in cfg.pop("params"):
        count = int(np.prod(shape, dtype=np.int64))
        end = pos + 4 * count
        if end > len(blob) - 4:
            raise CheckpointError("truncated parameter data")
        arr = np.frombuffer(blob[pos:end], dtype="<f4").astype(np.float64).reshape(shape)
        params.append((name, arr))
        pos = end
    if pos != len(blob) - 4:
        raise CheckpointError("trailing bytes after parameter data")
    return cfg, params


def save(path, config: dict, named_params) -> None:
    Path(path).write_bytes(dumps(config, named_params))


def load(path):
    return loads(Path(path).read_bytes())
