"""Flat little-endian parameter checkpoints.

Layout: magic ``BEQCKPT1``, uint32 tensor count, then per tensor a uint16
name length, utf-8 name, uint8 rank, uint32 dims and a uint8 complex flag;
the float64 payloads of all tensors follow in the same order.
"""

import struct
from pathlib import Path

import numpy as np

from blindeq.autodiff.params import ParamSet, ParamTensor
from blindeq.core.exceptions import ConfigurationError

MAGIC = b"BEQCKPT1"


def save_checkpoint(params: ParamSet, path: Path) -> None:
    header = bytearray(MAGIC)
    header += struct.pack("<I", len(params))
    for t in params:
        name = t.name.encode("utf-8")
        header += struct.pack("<H", len(name)) + name
        header += struct.pack("<B", t.values.ndim)
        header += struct.pack(f"<{t.values.ndim}I", *t.values.shape)
        header += struct.pack("<B", int(t.is_complex))
    payload = b"".join(np.ascontiguousarray(t.values, dtype="<f8").tobytes() for t in params)
    path.write_bytes(bytes(header) + payload)


def load_checkpoint(path: Path) -> ParamSet:
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise ConfigurationError(f"{path} is not a blindeq checkpoint")
    offset = 8
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    table: list[tuple[str, tuple[int, ...], bool]] = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        (is_complex,) = struct.unpack_from("<B", data, offset)
        offset += 1
        table.append((name, tuple(shape), bool(is_complex)))

    params = ParamSet()
    for name, shape, is_complex in table:
        n = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(shape)
        offset += 8 * n
        params.add(ParamTensor(name=name, values=values.astype(np.float64), is_complex=is_complex))
    if offset != len(data):
        raise ConfigurationError(f"{path} has {len(data) - offset} trailing bytes")
    return params
