import struct

import numpy as np
import pytest

from durasv.errors import CorruptPayloadError, FormatVersionError
from durasv.model import init_model, tiny_gradcheck_config
from durasv.model_io import MAGIC, load_model, save_model


@pytest.fixture
def params():
    return init_model(tiny_gradcheck_config(), np.random.default_rng(11))


def test_round_trip_is_bitwise(params, tmp_path):
    path = tmp_path / "model.bin"
    save_model(params, path)
    loaded = load_model(path)
    assert loaded.config == params.config
    assert list(loaded.tensors.keys()) == list(params.tensors.keys())
    for name in params.tensors:
        assert loaded.tensors[name].dtype == np.float64
        assert np.array_equal(loaded.tensors[name], params.tensors[name])


def test_truncated_file_detected(params, tmp_path):
    path = tmp_path / "model.bin"
    save_model(params, path)
    data = path.read_bytes()
    for cut in (5, len(MAGIC) + 1, len(data) // 2, len(data) - 3):
        clipped = tmp_path / f"cut{cut}.bin"
        clipped.write_bytes(data[:cut])
        with pytest.raises(CorruptPayloadError):
            load_model(clipped)


def test_version_bump_detected(params, tmp_path):
    path = tmp_path / "model.bin"
    save_model(params, path)
    data = bytearray(path.read_bytes())
    offset = len(MAGIC)
    (version,) = struct.unpack_from("<H", data, offset)
    struct.pack_into("<H", data, offset, version + 1)
    bumped = tmp_path / "bumped.bin"
    bumped.write_bytes(bytes(data))
    with pytest.raises(FormatVersionError) as err:
        load_model(bumped)
    assert err.value.found == version + 1


def test_bad_magic_detected(params, tmp_path):
    path = tmp_path / "model.bin"
    save_model(params, path)
    data = bytearray(path.read_bytes())
    data[0] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(CorruptPayloadError):
        load_model(path)


def test_trailing_garbage_detected(params, tmp_path):
    path = tmp_path / "model.bin"
    save_model(params, path)
    path.write_bytes(path.read_bytes() + b"junk")
    with pytest.raises(CorruptPayloadError):
        load_model(path)
