"""Weight checkpoints.

Layout (little endian)::

    b"SENW" | u32 version | u32 config_len | config (UTF-8 JSON) | u32 n_tensors
    then per tensor: u16 name_len | name | u8 ndim | u32 * ndim dims | float64 data
"""

from __future__ import annotations

import json
import struct
from typing import Mapping

import numpy as np

from senhar.core.tensor import Tensor
from senhar.errors import CheckpointError
from senhar.network import SENConfig, SENWeights, expected_shapes

MAGIC = b"SENW"
VERSION = 1


def checkpoint_save(weights: Mapping[str, Tensor | np.ndarray], config: dict, path) -> None:
    blob = json.dumps(config, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<II", VERSION, len(blob)), blob, struct.pack("<I", len(weights))]
    for name, t in weights.items():
        arr = np.asarray(t.data if isinstance(t, Tensor) else t, dtype="<f8", order="C")
        enc = name.encode()
        parts.append(struct.pack("<H", len(enc)) + enc)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw, self.pos, self.path = raw, 0, path

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.raw):
            raise CheckpointError(f"{self.path}: truncated while reading {what}")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def expected_checkpoint_shapes(config: dict) -> dict[str, tuple[int, ...]]:
    shapes = dict(expected_shapes(SENConfig(**config["sen"]))) if "sen" in config else {}
    head = config.get("head")
    if head:
        l, h, c = head["embedding_dim"], head["hidden"], head["n_classes"]
        shapes.update({"head.w_hidden": (h, l), "head.b_hidden": (h,), "head.w_out": (c, h), "head.b_out": (c,)})
    return shapes


def checkpoint_load(path, expected_config: dict | None = None) -> tuple[dict[str, np.ndarray], dict]:
    """Read tensors and config; shapes are validated against ``expected_config``
    (default: the stored config)."""
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    version, clen = r.unpack("<II", "header")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    try:
        config = json.loads(r.take(clen, "config"))
    except ValueError as exc:
        raise CheckpointError(f"{path}: corrupt config block") from exc
    (count,) = r.unpack("<I", "tensor count")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = r.unpack("<H", "tensor name length")
        name = r.take(nlen, "tensor name").decode()
        (ndim,) = r.unpack("<B", f"rank of {name}")
        shape = r.unpack(f"<{ndim}I", f"shape of {name}")
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(r.take(8 * size, f"data of {name}"), dtype="<f8").astype(np.float64)
        tensors[name] = data.reshape(shape)
    if r.pos != len(r.raw):
        raise CheckpointError(f"{path}: {len(r.raw) - r.pos} trailing bytes")

    expected = expected_checkpoint_shapes(expected_config if expected_config is not None else config)
    for name, shape in expected.items():
        if name not in tensors:
            raise CheckpointError(f"{path}: missing tensor {name!r}")
        if tensors[name].shape != tuple(shape):
            raise CheckpointError(f"{path}: tensor {name!r} has shape {tensors[name].shape}, "
                                  f"config expects {tuple(shape)}")
    return tensors, config


def save_sen(weights: SENWeights, path, extra: dict | None = None,
             more: Mapping[str, Tensor] | None = None) -> None:
    config = {"sen": weights.config.to_dict(), **(extra or {})}
    checkpoint_save({**weights.params, **(more or {})}, config, path)


def load_sen(path) -> tuple[SENWeights, dict[str, np.ndarray], dict]:
    """Returns (SEN weights, every stored tensor, stored config)."""
    tensors, config = checkpoint_load(path)
    cfg = SENConfig(**config["sen"])
    params = {n: Tensor(tensors[n], requires_grad=True, name=n) for n in expected_shapes(cfg)}
    return SENWeights(cfg, params), tensors, config
