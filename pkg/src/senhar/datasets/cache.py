"""Binary SampleSet cache.

Layout (little endian)::

    b"SENS" | u32 version | u32 header_len | header (UTF-8 JSON) | float64 data

The header holds provenance, per-sample metadata and the data shape
``N x |S| x 3 x n``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from senhar.datasets.base import SampleSet
from senhar.errors import DataError
from senhar.signal import RawSample

MAGIC = b"SENS"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


def save_sampleset(samples: SampleSet, path) -> None:
    data = samples.signals if len(samples) else np.zeros((0, 2, 3, 0))
    header = {
        "provenance": samples.provenance,
        "shape": list(data.shape),
        "labels": samples.labels.tolist(),
        "users": [s.user_id for s in samples.samples],
        "devices": [s.device_id for s in samples.samples],
        "original_labels": None if samples.original_labels is None else samples.original_labels.tolist(),
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, VERSION, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def load_sampleset(path) -> SampleSet:
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise DataError(f"{path}: truncated sample cache")
    magic, version, hlen = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise DataError(f"{path}: not a sample cache (magic {magic!r})")
    if version != VERSION:
        raise DataError(f"{path}: unsupported cache version {version}")
    try:
        header = json.loads(raw[_PREFIX.size:_PREFIX.size + hlen])
    except ValueError as exc:
        raise DataError(f"{path}: corrupt cache header") from exc
    shape = tuple(header["shape"])
    offset = _PREFIX.size + hlen
    expected = int(np.prod(shape)) * 8
    if len(raw) - offset != expected:
        raise DataError(f"{path}: data section has {len(raw) - offset} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype="<f8", offset=offset).reshape(shape).astype(np.float64)
    samples = [RawSample(data[i], lab, u, d) for i, (lab, u, d) in
               enumerate(zip(header["labels"], header["users"], header["devices"]))]
    orig = header.get("original_labels")
    return SampleSet(samples, header["provenance"], None if orig is None else np.asarray(orig, dtype=np.int64))
