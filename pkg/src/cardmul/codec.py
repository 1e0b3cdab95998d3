"""Dense <-> compressed conversions and memory accounting."""

from __future__ import annotations

import math
from typing import Literal, Union

import numpy as np

from .core import (
    BinaryCompressed,
    ColCompressed,
    RowCompressed,
    as_matrix,
    column_labels,
)
from .errors import CorruptionError, DomainError, ValidationError

FootprintModel = Literal["fixed32", "minimal-bits"]
Compressible = Union[np.ndarray, ColCompressed, RowCompressed, BinaryCompressed]

VALUE_BITS = 32


def compress_columns(W, tolerance: float = 0.0) -> ColCompressed:
    """Dictionary-compress each column of ``W``.

    Distinct values keep their first-occurrence order; columns with fewer than
    ``m`` distinct values are zero padded in the values table.
    """
    labels, counts, values = column_labels(as_matrix(W, "W"), tolerance)
    return ColCompressed(values=values, codes=labels, uniques=counts)


def compress_rows(V, tolerance: float = 0.0) -> RowCompressed:
    """Dictionary-compress each row of ``V``."""
    V = as_matrix(V, "V")
    labels, counts, values = column_labels(np.ascontiguousarray(V.T), tolerance)
    return RowCompressed(values=values.T, codes=labels.T, uniques=counts)


def _check_codes(codes: np.ndarray, uniques: np.ndarray, axis: int) -> None:
    limit = uniques[None, :] if axis == 0 else uniques[:, None]
    if codes.min() < 0 or np.any(codes >= limit):
        raise CorruptionError("encoding index exceeds the fiber's unique count")


def decompress_columns(c: ColCompressed) -> np.ndarray:
    _check_codes(c.codes, c.uniques, axis=0)
    return np.ascontiguousarray(np.take_along_axis(c.values, c.codes, axis=0))


def decompress_rows(r: RowCompressed) -> np.ndarray:
    _check_codes(r.codes, r.uniques, axis=1)
    return np.ascontiguousarray(np.take_along_axis(r.values, r.codes, axis=1))


def columns_as_rows(c: ColCompressed) -> RowCompressed:
    """Reinterpret the column compression of ``W`` as the row compression of ``W.T``."""
    return RowCompressed(values=c.values.T, codes=c.codes.T, uniques=c.uniques)


def rows_as_columns(r: RowCompressed) -> ColCompressed:
    """Reinterpret the row compression of ``V`` as the column compression of ``V.T``."""
    return ColCompressed(values=r.values.T, codes=r.codes.T, uniques=r.uniques)


def binary_bits(B, name: str = "B") -> np.ndarray:
    """Validate a 0/1 matrix and return it as ``uint8``."""
    a = np.asarray(B)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValidationError(f"{name} must be a nonempty 2-D matrix, got shape {a.shape}")
    ok = (a == 0) | (a == 1)
    if not ok.all():
        raise DomainError(f"{name} has non-binary entries")
    return a.astype(np.uint8)


def compress_binary(B) -> BinaryCompressed:
    """Store the first row and flip every column that starts with 1."""
    bits = binary_bits(B)
    first = bits[0].copy()
    return BinaryCompressed(first_row=first, bits=bits ^ first[None, :])


def decompress_binary(b: BinaryCompressed) -> np.ndarray:
    return (b.bits ^ b.first_row[None, :]).astype(np.float64)


def index_bits(m: int, model: FootprintModel) -> int:
    """Bits charged per encoding entry for a dictionary of size ``m``."""
    if model == "fixed32":
        return VALUE_BITS
    if model == "minimal-bits":
        return math.ceil(math.log2(max(2, m)))
    raise ValidationError(f"unknown footprint model {model!r}")


def memory_footprint(obj: Compressible, model: FootprintModel = "minimal-bits") -> int:
    """Storage cost in bits of a dense or compressed matrix.

    Dense entries and stored dictionary values cost 32 bits each. Encoding
    entries cost 32 bits under ``fixed32`` and ``ceil(log2(max(2, m)))``
    under ``minimal-bits``. Binary compressions store 1-bit values and
    1-bit codes (32 bits each under ``fixed32``).
    """
    index_bits(1, model)  # validates model
    if isinstance(obj, (ColCompressed, RowCompressed)):
        return VALUE_BITS * int(obj.uniques.sum()) + obj.rows * obj.cols * index_bits(obj.max_uniques, model)
    if isinstance(obj, BinaryCompressed):
        per = 1 if model == "minimal-bits" else VALUE_BITS
        return obj.cols * 2 * per + obj.rows * obj.cols * per
    W = as_matrix(obj)
    return VALUE_BITS * W.shape[0] * W.shape[1]
