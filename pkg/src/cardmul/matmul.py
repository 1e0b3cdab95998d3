"""Matrix multiplication kernels with elementary-multiplication counters.

All kernels return a :class:`MultReport`. ``scalar_mults`` counts products of
stored values only (matrix entries for the dense kernels, dictionary entries
for the compressed ones); index arithmetic is free.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .codec import binary_bits, compress_binary, compress_columns, compress_rows, decompress_binary
from .core import BinaryCompressed, ColCompressed, RowCompressed, as_matrix
from .errors import DimensionMismatch, ValidationError


class Kernel(str, Enum):
    NAIVE = "naive"
    STRASSEN = "strassen"
    OUTER = "outer_compressed"
    INNER = "inner_compressed"
    BINARY = "binary"


@dataclass
class MultReport:
    product: np.ndarray
    scalar_mults: int
    wall_time: float
    kernel: Kernel
    preprocess_time: float = 0.0


def relative_error(C, reference) -> float:
    """Relative Frobenius error of ``C`` against ``reference``."""
    C = np.asarray(C, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    denom = np.linalg.norm(reference)
    diff = np.linalg.norm(C - reference)
    return float(diff / denom) if denom > 0 else float(diff)


def _check_inner(p: int, q: int) -> None:
    if p != q:
        raise DimensionMismatch(f"inner dimensions disagree: {p} vs {q}")


def _split(seq: np.ndarray, parts: int) -> list[np.ndarray]:
    parts = max(1, min(parts, len(seq)))
    return [chunk for chunk in np.array_split(seq, parts) if len(chunk)]


def multiply_naive(A, B) -> MultReport:
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    _check_inner(A.shape[1], B.shape[0])
    out = np.empty((A.shape[0], B.shape[1]))
    _kernels.warmup()
    t0 = time.perf_counter()
    mults = _kernels.naive_kernel(A, B, out)
    return MultReport(out, int(mults), time.perf_counter() - t0, Kernel.NAIVE)


def _strassen(a: np.ndarray, b: np.ndarray, cutoff: int) -> tuple[np.ndarray, int]:
    n = a.shape[0]
    if n <= cutoff:
        out = np.empty((n, n))
        return out, int(_kernels.naive_kernel(a, b, out))
    h = n // 2
    a11, a12, a21, a22 = a[:h, :h], a[:h, h:], a[h:, :h], a[h:, h:]
    b11, b12, b21, b22 = b[:h, :h], b[:h, h:], b[h:, :h], b[h:, h:]
    c = lambda x: np.ascontiguousarray(x)  # noqa: E731
    m1, k1 = _strassen(c(a11 + a22), c(b11 + b22), cutoff)
    m2, k2 = _strassen(c(a21 + a22), c(b11), cutoff)
    m3, k3 = _strassen(c(a11), c(b12 - b22), cutoff)
    m4, k4 = _strassen(c(a22), c(b21 - b11), cutoff)
    m5, k5 = _strassen(c(a11 + a12), c(b22), cutoff)
    m6, k6 = _strassen(c(a21 - a11), c(b11 + b12), cutoff)
    m7, k7 = _strassen(c(a12 - a22), c(b21 + b22), cutoff)
    out = np.empty((n, n))
    out[:h, :h] = m1 + m4 - m5 + m7
    out[:h, h:] = m3 + m5
    out[h:, :h] = m2 + m4
    out[h:, h:] = m1 - m2 + m3 + m6
    return out, k1 + k2 + k3 + k4 + k5 + k6 + k7


def multiply_strassen(A, B, cutoff: int = 64) -> MultReport:
    """Strassen's 7-product recursion.

    Operands are zero padded to a common power-of-two size; blocks of size
    ``<= cutoff`` fall back to the naive kernel.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    _check_inner(A.shape[1], B.shape[0])
    if cutoff < 1:
        raise ValidationError("cutoff must be >= 1")
    M, P = A.shape
    N = B.shape[1]
    _kernels.warmup()
    t0 = time.perf_counter()
    n = 1 << (max(M, P, N) - 1).bit_length()
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    a[:M, :P] = A
    b[:P, :N] = B
    out, mults = _strassen(a, b, cutoff)
    product = np.ascontiguousarray(out[:M, :N])
    return MultReport(product, mults, time.perf_counter() - t0, Kernel.STRASSEN)


def _outer(w_values, w_order, w_offsets, w_uniques, v_values, v_codes, v_uniques, shape, dtype,
           j_order: np.ndarray, threads: int) -> tuple[np.ndarray, int]:
    chunks = _split(j_order, threads)

    def run(js):
        buf = np.zeros(shape, dtype=dtype)
        m = _kernels.outer_kernel(w_values, w_order, w_offsets, w_uniques,
                                  v_values, v_codes, v_uniques, js, buf)
        return buf, int(m)

    if len(chunks) == 1:
        return run(chunks[0])
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        results = list(pool.map(run, chunks))
    out = results[0][0]
    for buf, _ in results[1:]:
        out += buf
    return out, sum(m for _, m in results)


def _j_order(P: int, j_order) -> np.ndarray:
    if j_order is None:
        return np.arange(P, dtype=np.int64)
    js = np.asarray(j_order, dtype=np.int64)
    if js.shape != (P,) or not np.array_equal(np.sort(js), np.arange(P)):
        raise ValidationError("j_order must be a permutation of range(P)")
    return js


def multiply_outer_compressed(Wc: ColCompressed, Vc: RowCompressed, threads: int = 1,
                              j_order: Sequence[int] | None = None) -> MultReport:
    """Sum of rank-one terms computed on the dictionaries only.

    ``j_order`` permutes the accumulation order (ascending by default); it
    exists to check that reassociation stays within rounding error.
    """
    _check_inner(Wc.cols, Vc.rows)
    js = _j_order(Wc.cols, j_order)
    order, offsets = Wc.groups
    _kernels.warmup()
    t0 = time.perf_counter()
    out, mults = _outer(Wc.values, order, offsets, Wc.uniques, Vc.values, Vc.codes, Vc.uniques,
                        (Wc.rows, Vc.cols), np.float64, js, threads)
    return MultReport(out, mults, time.perf_counter() - t0, Kernel.OUTER)


def multiply_inner_compressed(Wr: RowCompressed, B, threads: int = 1) -> MultReport:
    """Multiply a row-compressed ``M x P`` matrix by a dense ``P x N`` matrix."""
    B = as_matrix(B, "B")
    _check_inner(Wr.cols, B.shape[0])
    out = np.zeros((Wr.rows, B.shape[1]))
    rows = np.arange(Wr.rows, dtype=np.int64)
    _kernels.warmup()
    t0 = time.perf_counter()
    chunks = _split(rows, threads)

    def run(rs):
        return int(_kernels.inner_kernel(Wr.values, Wr.codes, Wr.uniques, B, rs, out))

    if len(chunks) == 1:
        mults = run(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            mults = sum(pool.map(run, chunks))
    return MultReport(out, mults, time.perf_counter() - t0, Kernel.INNER)


def _binary_rows(Bb: Union[BinaryCompressed, np.ndarray]):
    """Row-wise binary encoding of the right operand: (values P x 2, codes P x N, uniques)."""
    if isinstance(Bb, BinaryCompressed):
        bits = decompress_binary(Bb).astype(np.uint8)
    else:
        bits = binary_bits(Bb)
    first = bits[:, 0].astype(np.int64)
    codes = (bits ^ bits[:, :1]).astype(np.int64)
    values = np.stack([first, 1 - first], axis=1)
    uniques = 1 + codes.any(axis=1).astype(np.int64)
    return np.ascontiguousarray(values), np.ascontiguousarray(codes), uniques


def multiply_binary(Ab: BinaryCompressed, Bb: Union[BinaryCompressed, np.ndarray],
                    threads: int = 1) -> MultReport:
    """Exact integer product of two 0/1 matrices through the rank-one scatter.

    ``Ab`` is the column compression of the left operand; ``Bb`` is either the
    compression of the right operand or the right operand itself.
    """
    if not isinstance(Ab, BinaryCompressed):
        raise ValidationError("left operand must be a BinaryCompressed matrix")
    t0 = time.perf_counter()
    v_values, v_codes, v_uniques = _binary_rows(Bb)
    _check_inner(Ab.cols, v_codes.shape[0])
    w_values = Ab.values.astype(np.int64)
    w_codes = np.ascontiguousarray(Ab.bits.T, dtype=np.int64)
    order = np.ascontiguousarray(np.argsort(w_codes, axis=1, kind="stable"))
    ones = w_codes.sum(axis=1)
    offsets = np.stack([np.zeros_like(ones), Ab.rows - ones, np.full_like(ones, Ab.rows)], axis=1)
    prep = time.perf_counter() - t0
    _kernels.warmup()
    t1 = time.perf_counter()
    out, mults = _outer(w_values, order, offsets, Ab.uniques, v_values, v_codes, v_uniques,
                        (Ab.rows, v_codes.shape[1]), np.int64, np.arange(Ab.cols, dtype=np.int64), threads)
    return MultReport(out, mults, time.perf_counter() - t1, Kernel.BINARY, preprocess_time=prep)


def _is_binary(a: np.ndarray) -> bool:
    return bool(((a == 0) | (a == 1)).all())


def choose_kernel(M: int, P: int, N: int, binary: bool = False) -> Kernel:
    """Dispatch rule: binary inputs use the binary kernel, ``P < min(M, N)``
    the outer kernel, everything else the inner kernel."""
    if binary:
        return Kernel.BINARY
    if P < min(M, N):
        return Kernel.OUTER
    return Kernel.INNER


def multiply_auto(A, B, tolerance: float = 0.0, threads: int = 1) -> MultReport:
    """Compress the operands as the dispatch rule requires and multiply.

    Compression time is reported as ``preprocess_time``; ``wall_time`` is
    multiplication only.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    _check_inner(A.shape[1], B.shape[0])
    kernel = choose_kernel(A.shape[0], A.shape[1], B.shape[1], _is_binary(A) and _is_binary(B))
    t0 = time.perf_counter()
    if kernel is Kernel.BINARY:
        Ab = compress_binary(A)
        prep = time.perf_counter() - t0
        report = multiply_binary(Ab, B, threads=threads)
        report.preprocess_time += prep
        return report
    if kernel is Kernel.OUTER:
        Wc = compress_columns(A, tolerance)
        Vc = compress_rows(B, tolerance)
        _ = Wc.groups
        prep = time.perf_counter() - t0
        report = multiply_outer_compressed(Wc, Vc, threads=threads)
    else:
        Wr = compress_rows(A, tolerance)
        prep = time.perf_counter() - t0
        report = multiply_inner_compressed(Wr, B, threads=threads)
    report.preprocess_time = prep
    return report
