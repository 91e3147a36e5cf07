"""Parameter checkpointing.

Layout: a magic line, an 8-byte little-endian manifest length, a JSON
manifest (block names in storage order, shapes, seed, step count, plus any
extra metadata), then each block's float64 values as little-endian C-order
bytes in manifest order. Round trips are bit exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .params import ParamBlock

_MAGIC = b"JPCKPT v1\n"


def save_checkpoint(path, blocks, seed: int, step: int, extra: dict | None = None) -> None:
    """Write named blocks plus a manifest; overwrite if the file exists."""
    blocks = list(blocks)
    names = [b.name for b in blocks]
    if len(set(names)) != len(names):
        raise ValueError("checkpoint blocks must have unique names")
    manifest = {
        "names": names,
        "shapes": [list(b.values.shape) for b in blocks],
        "seed": int(seed),
        "step": int(step),
        "extra": extra or {},
    }
    payload = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        for b in blocks:
            fh.write(np.ascontiguousarray(b.values, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[dict, dict]:
    """Read a checkpoint; returns (manifest, {name: float64 array})."""
    raw = Path(path).read_bytes()
    if not raw.startswith(_MAGIC):
        raise ValueError(f"{path}: not a checkpoint file")
    off = len(_MAGIC)
    (mlen,) = struct.unpack_from("<Q", raw, off)
    off += 8
    manifest = json.loads(raw[off:off + mlen].decode("utf-8"))
    off += mlen
    arrays = {}
    for name, shape in zip(manifest["names"], manifest["shapes"]):
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off)
        arrays[name] = arr.reshape(shape).astype(np.float64, copy=True)
        off += count * 8
    if off != len(raw):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return manifest, arrays


def restore_blocks(blocks, arrays: dict) -> None:
    """Copy loaded arrays into existing blocks by name; shapes must match."""
    for b in blocks:
        if b.name not in arrays:
            raise KeyError(f"checkpoint is missing block {b.name!r}")
        src = arrays[b.name]
        if src.shape != b.values.shape:
            raise ValueError(f"{b.name}: shape {src.shape} != {b.values.shape}")
        b.values[...] = src


__all__ = ["save_checkpoint", "load_checkpoint", "restore_blocks", "ParamBlock"]
