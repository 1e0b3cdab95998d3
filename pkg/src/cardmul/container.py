"""CSMM binary container and CSV matrix files.

Layout (little-endian)::

    magic   b"CSMM"
    version u16 = 1
    kind    u8   0 dense | 1 column-compressed | 2 row-compressed | 3 binary | 4 tensor

Kinds 0-3 continue with ``rows u64, cols u64`` and then:

* dense: ``rows*cols`` f64, row-major.
* column-compressed: ``m u32``, ``s_j u32 x cols``, values f64 ``m x cols``
  column-major, encoding u32 ``rows x cols`` row-major and 1-based.
* row-compressed: ``n u32``, ``t_j u32 x rows``, values f64 ``rows x n``
  row-major, encoding u32 ``rows x cols`` row-major and 1-based.
* binary: first row as a bitset of ``ceil(cols/8)`` bytes, then each
  encoding column as its own ``ceil(rows/8)``-byte bitset. Bits are packed
  least-significant first; padding bits are zero.

Kind 4 continues with ``order u8``, ``dims u64 x order`` and the f64 payload
in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from .core import BinaryCompressed, ColCompressed, RowCompressed, as_matrix, as_tensor
from .errors import CorruptionError, ValidationError

MAGIC = b"CSMM"
VERSION = 1
KIND_DENSE, KIND_COLS, KIND_ROWS, KIND_BINARY, KIND_TENSOR = range(5)

Storable = Union[np.ndarray, ColCompressed, RowCompressed, BinaryCompressed]

_HEAD = struct.Struct("<4sHB")
_SHAPE = struct.Struct("<QQ")


def _pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(bits.astype(np.uint8), bitorder="little").tobytes()


def dumps(obj: Storable, tensor: bool = False) -> bytes:
    """Serialize a matrix, tensor or compressed matrix.

    2-D arrays are written as dense matrices unless ``tensor`` is set; arrays
    of any other order are always written as tensors.
    """
    if isinstance(obj, ColCompressed):
        m, P = obj.values.shape
        return b"".join([
            _HEAD.pack(MAGIC, VERSION, KIND_COLS),
            _SHAPE.pack(obj.rows, obj.cols),
            struct.pack("<I", m),
            obj.uniques.astype("<u4").tobytes(),
            np.asfortranarray(obj.values).astype("<f8").tobytes(order="F"),
            (obj.codes + 1).astype("<u4").tobytes(),
        ])
    if isinstance(obj, RowCompressed):
        return b"".join([
            _HEAD.pack(MAGIC, VERSION, KIND_ROWS),
            _SHAPE.pack(obj.rows, obj.cols),
            struct.pack("<I", obj.max_uniques),
            obj.uniques.astype("<u4").tobytes(),
            obj.values.astype("<f8").tobytes(),
            (obj.codes + 1).astype("<u4").tobytes(),
        ])
    if isinstance(obj, BinaryCompressed):
        parts = [_HEAD.pack(MAGIC, VERSION, KIND_BINARY), _SHAPE.pack(obj.rows, obj.cols),
                 _pack_bits(obj.first_row)]
        parts.extend(_pack_bits(obj.bits[:, j]) for j in range(obj.cols))
        return b"".join(parts)
    a = np.asarray(obj, dtype=np.float64)
    if a.ndim == 2 and not tensor:
        a = as_matrix(a)
        return _HEAD.pack(MAGIC, VERSION, KIND_DENSE) + _SHAPE.pack(*a.shape) + a.astype("<f8").tobytes()
    a = as_tensor(a)
    if a.ndim > 255:
        raise ValidationError("tensor order exceeds 255")
    return b"".join([
        _HEAD.pack(MAGIC, VERSION, KIND_TENSOR),
        struct.pack("<B", a.ndim),
        np.asarray(a.shape, dtype="<u8").tobytes(),
        a.astype("<f8").tobytes(),
    ])


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.data):
            raise CorruptionError("container truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def array(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        return np.frombuffer(self.take(size), dtype=dtype).copy()

    def finish(self) -> None:
        if self.pos != len(self.data):
            raise CorruptionError(f"{len(self.data) - self.pos} trailing bytes after payload")


def _unpack_bits(raw: memoryview, count: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    if bits[count:].any():
        raise CorruptionError("nonzero padding bits in bitset")
    return bits[:count]


def loads(data: bytes) -> Storable:
    r = _Reader(data)
    magic, version, kind = _HEAD.unpack(r.take(_HEAD.size))
    if magic != MAGIC:
        raise CorruptionError("not a CSMM container (bad magic)")
    if version != VERSION:
        raise CorruptionError(f"unsupported CSMM version {version}")
    if kind == KIND_TENSOR:
        (order,) = struct.unpack("<B", r.take(1))
        dims = tuple(int(d) for d in r.array("<u8", order))
        out = r.array("<f8", int(np.prod(dims))).reshape(dims)
        r.finish()
        return out
    if kind not in (KIND_DENSE, KIND_COLS, KIND_ROWS, KIND_BINARY):
        raise CorruptionError(f"unknown CSMM kind {kind}")
    rows, cols = _SHAPE.unpack(r.take(_SHAPE.size))
    if rows < 1 or cols < 1:
        raise CorruptionError("empty matrix in container")
    if kind == KIND_DENSE:
        out = r.array("<f8", rows * cols).reshape(rows, cols)
    elif kind == KIND_COLS:
        (m,) = struct.unpack("<I", r.take(4))
        uniques = r.array("<u4", cols).astype(np.int64)
        values = r.array("<f8", m * cols).reshape(cols, m).T
        codes = r.array("<u4", rows * cols).reshape(rows, cols).astype(np.int64) - 1
        out = ColCompressed(values=values, codes=codes, uniques=uniques)
    elif kind == KIND_ROWS:
        (n,) = struct.unpack("<I", r.take(4))
        uniques = r.array("<u4", rows).astype(np.int64)
        values = r.array("<f8", rows * n).reshape(rows, n)
        codes = r.array("<u4", rows * cols).reshape(rows, cols).astype(np.int64) - 1
        out = RowCompressed(values=values, codes=codes, uniques=uniques)
    else:
        first = _unpack_bits(r.take((cols + 7) // 8), cols)
        col_bytes = (rows + 7) // 8
        bits = np.empty((rows, cols), dtype=np.uint8)
        for j in range(cols):
            bits[:, j] = _unpack_bits(r.take(col_bytes), rows)
        out = BinaryCompressed(first_row=first, bits=bits)
    r.finish()
    return out


def save(path, obj: Storable, tensor: bool = False) -> None:
    Path(path).write_bytes(dumps(obj, tensor=tensor))


def load(path) -> Storable:
    return loads(Path(path).read_bytes())


def read_csv(path) -> np.ndarray:
    """Read a headerless comma-separated numeric matrix."""
    try:
        a = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise ValidationError(f"malformed CSV {path}: {exc}") from exc
    return as_matrix(a, str(path))


def format_csv(matrix) -> str:
    a = np.asarray(matrix)
    if a.ndim == 1:
        a = a[None, :]
    return "".join(",".join(repr(v) for v in row) + "\n" for row in a.tolist())


def write_csv(path, matrix) -> None:
    Path(path).write_text(format_csv(matrix))


def load_matrix(path) -> Storable:
    """Load a CSMM container (``.csmm``) or a CSV file."""
    if Path(path).suffix.lower() == ".csmm":
        return load(path)
    return read_csv(path)


def save_matrix(path, obj: Storable) -> None:
    if Path(path).suffix.lower() == ".csmm":
        save(path, obj)
    else:
        write_csv(path, obj)
