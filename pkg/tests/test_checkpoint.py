import struct

import numpy as np
import pytest

from rnnf0.errors import CheckpointError
from rnnf0.neural.checkpoint import MAGIC, from_bytes, load_checkpoint, save_checkpoint, to_bytes
from rnnf0.neural.model import init_model, predict


def layout_size(model):
    """Byte count from the documented container layout."""
    size = 8 + 4 + 4 + 5 * 4 + 4 * model.n_layers + 16
    for group in (model.params, model.buffers):
        size += 4
        for name, arr in group.items():
            size += 2 + len(name.encode()) + 1 + 4 * arr.ndim + 8 * arr.size
    return size + 4


@pytest.mark.parametrize("cell", ["rnn", "lstm"])
@pytest.mark.parametrize("bn", [True, False])
def test_round_trip_bit_exact(tmp_path, cell, bn):
    m = init_model(16, (8, 8), 1, cell, seed=4, batchnorm=bn, normalize_frames=True)
    rng = np.random.default_rng(0)
    for v in m.buffers.values():
        v += rng.random(v.shape)
    path = tmp_path / "m.ckpt"
    save_checkpoint(m, path)
    back = load_checkpoint(path)
    assert list(back.params) == list(m.params)
    for k in m.params:
        assert back.params[k].tobytes() == m.params[k].tobytes()
    for k in m.buffers:
        assert back.buffers[k].tobytes() == m.buffers[k].tobytes()
    for attr in ("cell_type", "input_dim", "hidden", "context_radius", "batchnorm",
                 "normalize_frames", "sample_rate", "hop", "bn_momentum", "bn_eps", "version"):
        assert getattr(back, attr) == getattr(m, attr)
    x = rng.standard_normal((2, 3, 16))
    assert np.array_equal(predict(m, x), predict(back, x))


def test_deterministic_size():
    m = init_model(16, (8, 8), 1, "lstm", seed=0)
    data = to_bytes(m)
    assert len(data) == layout_size(m)
    # fixed dims, different weights: identical size and header
    other = to_bytes(init_model(16, (8, 8), 1, "lstm", seed=99))
    assert len(other) == len(data)
    assert other[:60] == data[:60]


def test_header_fields():
    m = init_model(16, (8, 4), 2, "lstm", seed=0, batchnorm=True, normalize_frames=False)
    data = to_bytes(m)
    assert data[:8] == MAGIC
    assert struct.unpack_from("<I", data, 8) == (1,)
    cell, flags, _ = struct.unpack_from("<BBH", data, 12)
    assert (cell, flags) == (1, 1)
    assert struct.unpack_from("<5I", data, 16) == (16, 2, 16000, 80, 2)
    assert struct.unpack_from("<2I", data, 36) == (8, 4)


def test_wrong_magic(tmp_path):
    data = bytearray(to_bytes(init_model(16, (8,), 1, "rnn")))
    data[:8] = b"NOTACKPT"
    path = tmp_path / "bad.ckpt"
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_corrupt_payload():
    data = bytearray(to_bytes(init_model(16, (8,), 1, "rnn")))
    data[200] ^= 0xFF
    with pytest.raises(CheckpointError, match="checksum"):
        from_bytes(bytes(data))


def test_truncated():
    data = to_bytes(init_model(16, (8,), 1, "rnn"))
    with pytest.raises(CheckpointError):
        from_bytes(data[:100])


def test_version_mismatch():
    import zlib
    data = bytearray(to_bytes(init_model(16, (8,), 1, "rnn")))
    struct.pack_into("<I", data, 8, 99)
    body = bytes(data[:-4])
    data[-4:] = struct.pack("<I", zlib.crc32(body))
    with pytest.raises(CheckpointError, match="version"):
        from_bytes(bytes(data))


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nope.ckpt")
