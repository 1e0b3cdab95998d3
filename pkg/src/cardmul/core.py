"""Value types and cardinality measurement.

Dense matrices and tensors are plain row-major ``float64`` numpy arrays; the
helpers :func:`as_matrix` and :func:`as_tensor` normalize and validate them.
The compressed representations are immutable dataclasses whose encodings are
stored 0-based. The 1-based form is available through ``.encoding`` and is
what the container format writes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

from .errors import CorruptionError, DimensionMismatch, ModeError, ValidationError

Mode = Literal["columns", "rows"]


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Return ``x`` as a C-contiguous 2-D float64 array with at least one entry."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValidationError(f"{name} must be nonempty, got shape {a.shape}")
    return a


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim < 1 or a.size == 0:
        raise ValidationError(f"{name} must have order >= 1 and be nonempty, got shape {a.shape}")
    return a


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True, order="C")
    a.setflags(write=False)
    return a


# -- fiber labelling ---------------------------------------------------------

def _exact_labels(W: np.ndarray):
    M, P = W.shape
    bits = W.view(np.uint64)
    order = np.argsort(bits, axis=0, kind="stable")
    sorted_bits = np.take_along_axis(bits, order, axis=0)
    starts = np.ones((M, P), dtype=bool)
    starts[1:] = sorted_bits[1:] != sorted_bits[:-1]
    counts = starts.sum(axis=0)
    value_rank = np.cumsum(starts, axis=0) - 1

    # group starts enumerated column by column, in sorted-value order
    col, srow = np.nonzero(starts.T)
    first_row = order[srow, col]
    offsets = np.concatenate(([0], np.cumsum(counts)))
    by_first = np.lexsort((first_row, col))
    rank = np.empty(len(col), dtype=np.int64)
    rank[by_first] = np.arange(len(col)) - offsets[col[by_first]]

    sorted_labels = rank[offsets[np.arange(P)][None, :] + value_rank]
    labels = np.empty((M, P), dtype=np.int64)
    np.put_along_axis(labels, order, sorted_labels, axis=0)

    values = np.zeros((int(counts.max()), P))
    values[rank, col] = W[first_row, col]
    return labels, counts.astype(np.int64), values


def _tolerant_labels(W: np.ndarray, tolerance: float):
    M, P = W.shape
    labels = np.empty((M, P), dtype=np.int64)
    reps_per_col = []
    for j in range(P):
        reps: list[float] = []
        for i in range(M):
            v = W[i, j]
            hit = -1
            if reps:
                close = np.nonzero(np.abs(np.asarray(reps) - v) <= tolerance)[0]
                if close.size:
                    hit = int(close[0])
            if hit < 0:
                reps.append(v)
                hit = len(reps) - 1
            labels[i, j] = hit
        reps_per_col.append(reps)
    counts = np.array([len(r) for r in reps_per_col], dtype=np.int64)
    values = np.zeros((int(counts.max()), P))
    for j, reps in enumerate(reps_per_col):
        values[: len(reps), j] = reps
    return labels, counts, values


def column_labels(W, tolerance: float = 0.0):
    """Label each column's entries by the first-occurrence order of their values.

    Returns ``(labels, counts, values)``: 0-based labels of shape ``W.shape``,
    the number of distinct values per column, and the zero-padded table of
    representatives (``max(counts) x cols``).

    With ``tolerance == 0`` values are compared by their bit pattern, so
    ``-0.0`` and ``0.0`` stay distinct and NaNs round-trip. Otherwise a value
    joins the first earlier representative within ``tolerance``.
    """
    W = as_matrix(W)
    if tolerance < 0:
        raise ValidationError("tolerance must be >= 0")
    if tolerance == 0:
        return _exact_labels(W)
    return _tolerant_labels(W, float(tolerance))


def cardinality_degree(matrix, mode: Mode = "columns", tolerance: float = 0.0) -> int:
    """Largest number of distinct values in any column (or row) of ``matrix``."""
    W = as_matrix(matrix)
    if mode == "rows":
        W = np.ascontiguousarray(W.T)
    elif mode != "columns":
        raise ValidationError(f"mode must be 'columns' or 'rows', got {mode!r}")
    _, counts, _ = column_labels(W, tolerance)
    return int(counts.max())


def is_nk_sparse(tensor, fiber_mode: int, k: int, tolerance: float = 0.0) -> bool:
    """True iff every mode-``fiber_mode`` fiber holds at most ``k`` distinct values.

    ``fiber_mode`` is 1-based, as in the usual tensor notation.
    """
    T = as_tensor(tensor)
    if not 1 <= fiber_mode <= T.ndim:
        raise ModeError(f"fiber_mode {fiber_mode} out of range for order-{T.ndim} tensor")
    if k < 1:
        raise ValidationError("k must be >= 1")
    fibers = np.moveaxis(T, fiber_mode - 1, 0).reshape(T.shape[fiber_mode - 1], -1)
    _, counts, _ = column_labels(np.ascontiguousarray(fibers), tolerance)
    return bool(counts.max() <= k)


# -- compressed types --------------------------------------------------------

def _group_index(codes: np.ndarray, width: int):
    """Inverse index of a (fibers x positions) code table.

    For fiber ``f`` and label ``a``, the positions carrying ``a`` are
    ``order[f, offsets[f, a]:offsets[f, a + 1]]`` in ascending position order.
    """
    F = codes.shape[0]
    order = np.argsort(codes, axis=1, kind="stable")
    flat = (np.arange(F)[:, None] * width + codes).ravel()
    sizes = np.bincount(flat, minlength=F * width).reshape(F, width)
    offsets = np.zeros((F, width + 1), dtype=np.int64)
    np.cumsum(sizes, axis=1, out=offsets[:, 1:])
    return np.ascontiguousarray(order, dtype=np.int64), offsets


@dataclass(frozen=True, eq=False)
class ColCompressed:
    """Column-wise dictionary compression of an ``M x P`` matrix.

    ``values[t, j]`` is the t-th distinct value of column ``j`` (first
    occurrence order, zero padded below ``uniques[j]``); ``codes[i, j]`` is the
    0-based row of ``values`` holding ``W[i, j]``.
    """

    values: np.ndarray
    codes: np.ndarray
    uniques: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        codes = np.asarray(self.codes, dtype=np.int64)
        uniques = np.asarray(self.uniques, dtype=np.int64)
        if values.ndim != 2 or codes.ndim != 2 or uniques.ndim != 1:
            raise ValidationError("values, codes must be 2-D and uniques 1-D")
        m, P = values.shape
        if codes.shape[1] != P or uniques.shape[0] != P or codes.shape[0] < 1 or P < 1:
            raise DimensionMismatch(
                f"inconsistent shapes values={values.shape} codes={codes.shape} uniques={uniques.shape}"
            )
        if uniques.min() < 1 or uniques.max() != m:
            raise CorruptionError("uniques must lie in 1..m with max equal to m")
        if codes.min() < 0 or np.any(codes >= uniques[None, :]):
            raise CorruptionError("encoding index exceeds the column's unique count")
        pad = np.arange(m)[:, None] >= uniques[None, :]
        if np.any(values[pad] != 0):
            raise CorruptionError("padding rows of the values table must be zero")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "codes", _readonly(codes))
        object.__setattr__(self, "uniques", _readonly(uniques))

    @property
    def rows(self) -> int:
        return self.codes.shape[0]

    @property
    def cols(self) -> int:
        return self.codes.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    @property
    def max_uniques(self) -> int:
        return self.values.shape[0]

    @property
    def encoding(self) -> np.ndarray:
        """1-based encoding matrix."""
        return self.codes + 1

    @cached_property
    def groups(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-column inverse index: ``(order, offsets)`` with order of shape ``P x M``."""
        return _group_index(np.ascontiguousarray(self.codes.T), self.max_uniques)


@dataclass(frozen=True, eq=False)
class RowCompressed:
    """Row-wise dictionary compression of a ``P x N`` matrix.

    ``values[j, t]`` is the t-th distinct value of row ``j``; ``codes[j, k]``
    indexes into that row of ``values``.
    """

    values: np.ndarray
    codes: np.ndarray
    uniques: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        codes = np.asarray(self.codes, dtype=np.int64)
        uniques = np.asarray(self.uniques, dtype=np.int64)
        if values.ndim != 2 or codes.ndim != 2 or uniques.ndim != 1:
            raise ValidationError("values, codes must be 2-D and uniques 1-D")
        P, n = values.shape
        if codes.shape[0] != P or uniques.shape[0] != P or codes.shape[1] < 1 or P < 1:
            raise DimensionMismatch(
                f"inconsistent shapes values={values.shape} codes={codes.shape} uniques={uniques.shape}"
            )
        if uniques.min() < 1 or uniques.max() != n:
            raise CorruptionError("uniques must lie in 1..n with max equal to n")
        if codes.min() < 0 or np.any(codes >= uniques[:, None]):
            raise CorruptionError("encoding index exceeds the row's unique count")
        pad = np.arange(n)[None, :] >= uniques[:, None]
        if np.any(values[pad] != 0):
            raise CorruptionError("padding columns of the values table must be zero")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "codes", _readonly(codes))
        object.__setattr__(self, "uniques", _readonly(uniques))

    @property
    def rows(self) -> int:
        return self.codes.shape[0]

    @property
    def cols(self) -> int:
        return self.codes.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    @property
    def max_uniques(self) -> int:
        return self.values.shape[1]

    @property
    def encoding(self) -> np.ndarray:
        """1-based encoding matrix."""
        return self.codes + 1

    @cached_property
    def groups(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-row inverse index: ``(order, offsets)`` with order of shape ``P x N``."""
        return _group_index(self.codes, self.max_uniques)


@dataclass(frozen=True, eq=False)
class BinaryCompressed:
    """Compression of a 0/1 matrix: first row plus complement-normalized bits.

    Every column of ``bits`` starts with 0; a 0 bit means "same as the first
    row", a 1 bit means "its complement".
    """

    first_row: np.ndarray
    bits: np.ndarray

    def __post_init__(self):
        first = np.asarray(self.first_row)
        bits = np.asarray(self.bits)
        if first.ndim != 1 or bits.ndim != 2 or bits.shape[1] != first.shape[0] or bits.shape[0] < 1:
            raise DimensionMismatch(f"inconsistent shapes first_row={first.shape} bits={bits.shape}")
        if bits.shape[1] < 1:
            raise ValidationError("binary matrix must have at least one column")
        if not (np.isin(first, (0, 1)).all() and np.isin(bits, (0, 1)).all()):
            raise CorruptionError("binary compression holds non-binary entries")
        if np.any(bits[0] != 0):
            raise CorruptionError("every encoding column must start with 0")
        object.__setattr__(self, "first_row", _readonly(first.astype(np.uint8)))
        object.__setattr__(self, "bits", _readonly(bits.astype(np.uint8)))

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def values(self) -> np.ndarray:
        """The ``2 x cols`` value table: stored first row over its complement."""
        return np.vstack([self.first_row, 1 - self.first_row]).astype(np.uint8)

    @property
    def uniques(self) -> np.ndarray:
        """Distinct values per column (1 for constant columns, else 2)."""
        return 1 + self.bits.any(axis=0).astype(np.int64)
