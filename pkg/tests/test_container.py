import struct

import numpy as np
import pytest

from cardmul import compress_binary, compress_columns, compress_rows
from cardmul.codec import decompress_binary, decompress_columns, decompress_rows
from cardmul.container import dumps, format_csv, load_matrix, loads, read_csv, save_matrix
from cardmul.core import BinaryCompressed, ColCompressed, RowCompressed
from cardmul.errors import CorruptionError, ValidationError

from conftest import A_BIN, V_EX, W_EX


def test_dense_round_trip_and_header():
    data = dumps(W_EX)
    assert data[:4] == b"CSMM"
    assert struct.unpack("<HB", data[4:7]) == (1, 0)
    assert struct.unpack("<QQ", data[7:23]) == (6, 2)
    out = loads(data)
    np.testing.assert_array_equal(out, W_EX)
    assert dumps(out) == data


def test_column_layout():
    c = compress_columns(W_EX)
    data = dumps(c)
    body = data[23:]
    (m,) = struct.unpack("<I", body[:4])
    assert m == 3
    assert struct.unpack("<II", body[4:12]) == (3, 3)
    values = np.frombuffer(body[12:12 + 8 * 6], dtype="<f8")
    # column-major
    np.testing.assert_array_equal(values, [2.1, 1, 3, 1.1, 2.3, 4])
    enc = np.frombuffer(body[12 + 48:], dtype="<u4").reshape(6, 2)
    np.testing.assert_array_equal(enc, c.encoding)
    out = loads(data)
    assert isinstance(out, ColCompressed)
    np.testing.assert_array_equal(decompress_columns(out), W_EX)
    assert dumps(out) == data


def test_row_and_binary_round_trip(rng):
    r = compress_rows(V_EX)
    out = loads(dumps(r))
    assert isinstance(out, RowCompressed)
    np.testing.assert_array_equal(decompress_rows(out), V_EX)
    B = (rng.random((13, 11)) < 0.5).astype(float)
    b = compress_binary(B)
    data = dumps(b)
    assert len(data) == 23 + 2 + 11 * 2
    out = loads(data)
    assert isinstance(out, BinaryCompressed)
    np.testing.assert_array_equal(decompress_binary(out), B)
    assert dumps(out) == data


def test_binary_bit_order():
    data = dumps(compress_binary(A_BIN))
    assert data[23] == 0b100  # first row (0, 0, 1), least significant bit first
    assert data[24] == 0b010100  # column 1 encoding (0, 0, 1, 0, 1, 0)


def test_tensor_round_trip(rng):
    T = rng.normal(size=(2, 3, 4))
    data = dumps(T)
    assert data[6] == 4 and data[7] == 3
    np.testing.assert_array_equal(loads(data), T)
    M = loads(dumps(W_EX, tensor=True))
    np.testing.assert_array_equal(M, W_EX)


@pytest.mark.parametrize("mutate", [
    lambda d: b"XXXX" + d[4:],
    lambda d: d[:4] + struct.pack("<H", 2) + d[6:],
    lambda d: d[:4] + d[4:6] + b"\x09" + d[7:],
    lambda d: d[:-1],
    lambda d: d + b"\x00",
])
def test_corrupt_containers(mutate):
    with pytest.raises(CorruptionError):
        loads(mutate(dumps(compress_columns(W_EX))))


def test_corrupt_encoding_index():
    data = bytearray(dumps(compress_columns(W_EX)))
    data[-4:] = struct.pack("<I", 9)
    with pytest.raises(CorruptionError):
        loads(bytes(data))
    data[-4:] = struct.pack("<I", 0)
    with pytest.raises(CorruptionError):
        loads(bytes(data))


def test_nonzero_padding_bits_rejected():
    data = bytearray(dumps(compress_binary(A_BIN)))
    data[23] |= 0x80
    with pytest.raises(CorruptionError):
        loads(bytes(data))


def test_csv_round_trip(tmp_path, rng):
    W = rng.normal(size=(4, 3))
    path = tmp_path / "w.csv"
    save_matrix(path, W)
    np.testing.assert_array_equal(read_csv(path), W)
    save_matrix(tmp_path / "w.csmm", W)
    np.testing.assert_array_equal(load_matrix(tmp_path / "w.csmm"), W)
    assert format_csv([[1.0, 2.5]]) == "1.0,2.5\n"


def test_single_row_csv(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("1,2,3\n")
    assert read_csv(path).shape == (1, 3)


def test_malformed_csv(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3,x\n")
    with pytest.raises(ValidationError):
        read_csv(path)
