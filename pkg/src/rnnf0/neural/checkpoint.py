"""
Binary checkpoint container.

Layout, all little-endian::

    magic         8 bytes  b"RNNF0CK\\0"
    version       u32
    cell_type     u8       0 = rnn, 1 = lstm
    flags         u8       bit 0 batchnorm, bit 1 per-frame normalization
    reserved      u16      0
    input_dim     u32      M
    context       u32      p
    sample_rate   u32
    hop           u32
    n_layers      u32
    widths        u32 * n_layers
    bn_momentum   f64
    bn_eps        f64
    n_params      u32, then n_params arrays
    n_buffers     u32, then n_buffers arrays
    crc32         u32      of every preceding byte

Each array is ``name_len u16, name utf-8, ndim u8, dims u32 * ndim``
followed by its values as f64 in C order.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .model import FORMAT_VERSION, RecurrentModel

MAGIC = b"RNNF0CK\0"
_CELLS = {"rnn": 0, "lstm": 1}


def _pack_array(name: str, arr: np.ndarray) -> bytes:
    raw = name.encode()
    head = struct.pack("<H", len(raw)) + raw + struct.pack("<B", arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + np.ascontiguousarray(arr, dtype="<f8").tobytes()


def to_bytes(model: RecurrentModel) -> bytes:
    flags = int(model.batchnorm) | (int(model.normalize_frames) << 1)
    n = model.n_layers
    out = [MAGIC, struct.pack("<I", model.version),
           struct.pack("<BBH", _CELLS[model.cell_type], flags, 0),
           struct.pack("<5I", model.input_dim, model.context_radius, model.sample_rate,
                       model.hop, n),
           struct.pack(f"<{n}I", *model.hidden),
           struct.pack("<2d", model.bn_momentum, model.bn_eps),
           struct.pack("<I", len(model.params))]
    out += [_pack_array(k, v) for k, v in model.params.items()]
    out.append(struct.pack("<I", len(model.buffers)))
    out += [_pack_array(k, v) for k, v in model.buffers.items()]
    body = b"".join(out)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str) -> tuple:
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise CheckpointError("checkpoint truncated")
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return vals

    def array(self) -> tuple[str, np.ndarray]:
        (ln,) = self.take("<H")
        name = bytes(self.take(f"<{ln}s")[0]).decode()
        (ndim,) = self.take("<B")
        shape = self.take(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        raw = self.take(f"<{8 * count}s")[0]
        return name, np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def from_bytes(data: bytes) -> RecurrentModel:
    if len(data) < len(MAGIC) + 8 or data[:len(MAGIC)] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError("checksum mismatch, file is corrupt")
    rd = _Reader(body)
    rd.pos = len(MAGIC)
    (version,) = rd.take("<I")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    cell, flags, _ = rd.take("<BBH")
    cells = {v: k for k, v in _CELLS.items()}
    if cell not in cells:
        raise CheckpointError(f"unknown cell type code {cell}")
    input_dim, radius, sample_rate, hop, n = rd.take("<5I")
    hidden = rd.take(f"<{n}I")
    momentum, eps = rd.take("<2d")
    (n_params,) = rd.take("<I")
    params = dict(rd.array() for _ in range(n_params))
    (n_buffers,) = rd.take("<I")
    buffers = dict(rd.array() for _ in range(n_buffers))
    if rd.pos != len(body):
        raise CheckpointError("trailing bytes after checkpoint payload")
    model = RecurrentModel(cells[cell], input_dim, tuple(hidden), radius, bool(flags & 1),
                           bool(flags & 2), sample_rate, hop, momentum, eps, params, buffers,
                           version)
    _check_shapes(model)
    return model


def _check_shapes(model: RecurrentModel) -> None:
    G = 4 if model.cell_type == "lstm" else 1
    fan_in = model.input_dim
    expected = {}
    for l, q in enumerate(model.hidden):
        expected[f"layer{l}.W"] = (G * q, fan_in + 1)
        expected[f"layer{l}.H"] = (G * q, q + 1)
        if model.batchnorm:
            expected[f"layer{l}.gamma"] = (G * q,)
            expected[f"layer{l}.beta"] = (G * q,)
        fan_in = q
    expected["out.W"] = (model.input_dim, fan_in + 1)
    expected["out.H"] = (model.input_dim, model.input_dim + 1)
    got = {k: v.shape for k, v in model.params.items()}
    if got != expected:
        raise CheckpointError("parameter shapes do not match the architecture header")


def save_checkpoint(model: RecurrentModel, path: str | Path) -> None:
    Path(path).write_bytes(to_bytes(model))


def load_checkpoint(path: str | Path) -> RecurrentModel:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return from_bytes(data)
