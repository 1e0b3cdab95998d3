"""Synthetic data generation, benchmark grids, memory reports and the two demos."""

from __future__ import annotations

import csv
import dataclasses
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, TextIO

import numpy as np

from . import matmul
from .codec import columns_as_rows, compress_binary, compress_columns, compress_rows, memory_footprint
from .container import read_csv
from .core import as_matrix
from .errors import ValidationError
from .matmul import MultReport, relative_error
from .sparsity import project_cardinality
from .tensor import tensor_regression_fit

KERNELS = ("naive", "strassen", "outer", "inner", "auto", "binary")


def gen(M: int, P: int, N: int, k: int, seed: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Integers drawn uniformly from ``1..k`` minus one shared standard-normal draw.

    ``A`` (``M x P``) has column cardinality at most ``k`` and ``B``
    (``P x N``) row cardinality at most ``k``.
    """
    if k < 1:
        raise ValidationError("sparsity degree k must be >= 1")
    if min(M, P, N) < 1:
        raise ValidationError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    A = rng.integers(1, k + 1, size=(M, P)).astype(np.float64)
    B = rng.integers(1, k + 1, size=(P, N)).astype(np.float64)
    shift = rng.standard_normal()
    return A - shift, B - shift


def gen_binary(M: int, P: int, N: int, seed: Optional[int] = None,
               density: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    A = (rng.random((M, P)) < density).astype(np.float64)
    B = (rng.random((P, N)) < density).astype(np.float64)
    return A, B


def run_kernel(name: str, A: np.ndarray, B: np.ndarray, threads: int = 1,
               strassen_cutoff: int = 64) -> MultReport:
    """Run one kernel on dense operands, compressing them first when needed.

    Compression time is reported as ``preprocess_time``.
    """
    t0 = time.perf_counter()
    if name == "naive":
        return matmul.multiply_naive(A, B)
    if name == "strassen":
        return matmul.multiply_strassen(A, B, cutoff=strassen_cutoff)
    if name == "auto":
        return matmul.multiply_auto(A, B, threads=threads)
    if name == "outer":
        Wc, Vc = compress_columns(A), compress_rows(B)
        _ = Wc.groups
        prep = time.perf_counter() - t0
        rep = matmul.multiply_outer_compressed(Wc, Vc, threads=threads)
    elif name == "inner":
        Wr = compress_rows(A)
        prep = time.perf_counter() - t0
        rep = matmul.multiply_inner_compressed(Wr, B, threads=threads)
    elif name == "binary":
        Ab, Bb = compress_binary(A), compress_binary(B)
        prep = time.perf_counter() - t0
        rep = matmul.multiply_binary(Ab, Bb, threads=threads)
    else:
        raise ValidationError(f"unknown kernel {name!r}; choose from {', '.join(KERNELS)}")
    rep.preprocess_time += prep
    return rep


_SHORT = {matmul.Kernel.NAIVE: "naive", matmul.Kernel.STRASSEN: "strassen", matmul.Kernel.OUTER: "outer",
          matmul.Kernel.INNER: "inner", matmul.Kernel.BINARY: "binary"}


def strassen_mults(M: int, P: int, N: int, cutoff: int = 64) -> int:
    n = 1 << (max(M, P, N) - 1).bit_length()
    levels = 0
    while n > cutoff:
        n //= 2
        levels += 1
    return 7 ** levels * n ** 3


def mult_bound(name: str, A: np.ndarray, B: np.ndarray) -> int:
    """Work bound of a kernel: ``m * P * n`` for outer and binary,
    ``N * M * max s_i`` for inner, the padded recursion count for Strassen
    and ``M * P * N`` for naive."""
    M, P = A.shape
    N = B.shape[1]
    if name == "strassen":
        return strassen_mults(M, P, N)
    if name in ("outer", "binary"):
        m = int(compress_columns(A).uniques.max())
        n = int(compress_rows(B).uniques.max())
        return m * P * n
    if name == "inner":
        return N * M * int(compress_rows(A).uniques.max())
    return M * P * N


@dataclass
class BenchRow:
    kernel: str
    M: int
    P: int
    N: int
    k: int
    preprocess_time: float
    multiply_time: float
    speedup: float
    scalar_mults: int
    mult_bound: int
    rel_error: float
    passed: bool


TIMING_FIELDS = ("preprocess_time", "multiply_time", "speedup")


def _cell(name: str, M: int, P: int, N: int, k: int, pairs: Sequence[tuple[np.ndarray, np.ndarray]],
          naive_times: list[float], threads: int) -> BenchRow:
    prep, mult, errs, counts = [], [], [], []
    exact = True
    for A, B in pairs:
        ref = matmul.multiply_naive(A, B).product
        rep = run_kernel(name, A, B, threads=threads)
        prep.append(rep.preprocess_time)
        mult.append(rep.wall_time)
        errs.append(relative_error(rep.product, ref))
        counts.append(rep.scalar_mults)
        if name == "binary":
            exact &= bool(np.array_equal(rep.product, ref))
    A, B = pairs[-1]
    mean_mult = statistics.fmean(mult)
    err = max(errs)
    passed = exact if name == "binary" else err <= 1e-9
    bound = mult_bound(_SHORT[rep.kernel], A, B)
    passed &= counts[-1] <= bound
    return BenchRow(kernel=name, M=M, P=P, N=N, k=k,
                    preprocess_time=statistics.fmean(prep), multiply_time=mean_mult,
                    speedup=statistics.fmean(naive_times) / mean_mult if mean_mult > 0 else float("inf"),
                    scalar_mults=counts[-1], mult_bound=bound, rel_error=err, passed=passed)


def bench(sizes: Iterable[tuple[int, int, int]], degrees: Iterable[int],
          kernels: Sequence[str] = ("naive", "outer", "inner"), repeats: int = 3,
          seed: int = 0, binary: bool = True, threads: int = 1,
          progress: Optional[Callable[[BenchRow], None]] = None) -> list[BenchRow]:
    """Benchmark every (size, degree, kernel) cell against naive.

    Each cell is averaged over ``repeats`` freshly generated input pairs. When
    ``binary`` is set a binary grid (naive vs binary kernel) is appended for
    every size. ``scalar_mults`` and ``mult_bound`` refer to the last repeat.
    """
    kernels = [k for k in kernels if k != "binary"]
    for name in kernels:
        if name not in KERNELS:
            raise ValidationError(f"unknown kernel {name!r}")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    degrees = list(degrees)
    rows: list[BenchRow] = []

    def emit(row: BenchRow) -> None:
        rows.append(row)
        if progress:
            progress(row)

    for M, P, N in sizes:
        for k in degrees:
            pairs = [gen(M, P, N, k, seed=seed + r) for r in range(repeats)]
            naive_times = [matmul.multiply_naive(A, B).wall_time for A, B in pairs]
            for name in kernels:
                emit(_cell(name, M, P, N, k, pairs, naive_times, threads))
        if binary:
            pairs = [gen_binary(M, P, N, seed=seed + r) for r in range(repeats)]
            naive_times = [matmul.multiply_naive(A, B).wall_time for A, B in pairs]
            for name in ("naive", "binary"):
                emit(_cell(name, M, P, N, 2, pairs, naive_times, threads))
    return rows


def bench_fields(timings: bool = True) -> list[str]:
    names = [f.name for f in dataclasses.fields(BenchRow)]
    return names if timings else [n for n in names if n not in TIMING_FIELDS]


def write_bench_csv(rows: Iterable[BenchRow], stream: TextIO, timings: bool = True) -> None:
    """Write bench rows as CSV. ``timings=False`` drops the wall-clock columns
    so that identical seeds give byte-identical files."""
    fields = bench_fields(timings)
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        d = dataclasses.asdict(row)
        w.writerow([_fmt(d[f]) for f in fields])


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def memreport(W, tolerance: float = 0.0) -> dict:
    """Dense vs column-compressed storage in bits under both footprint models."""
    W = as_matrix(W, "W")
    c = compress_columns(W, tolerance)
    return {
        "rows": W.shape[0],
        "cols": W.shape[1],
        "max_uniques": c.max_uniques,
        "dense_fixed32": memory_footprint(W, "fixed32"),
        "dense_minimal_bits": memory_footprint(W, "minimal-bits"),
        "compressed_fixed32": memory_footprint(c, "fixed32"),
        "compressed_minimal_bits": memory_footprint(c, "minimal-bits"),
    }


# -- training demo -----------------------------------------------------------

def synthetic_blobs(n: int = 600, features: int = 16, classes: int = 3, levels: int = 16,
                    seed: Optional[int] = 0) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian blobs quantized to ``0..levels`` so columns have low cardinality."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.2, 0.8, size=(classes, features)) * levels
    y = rng.integers(0, classes, size=n)
    X = centers[y] + rng.normal(scale=0.12 * levels, size=(n, features))
    # adding 0.0 turns -0.0 into 0.0 so the two zeros share one label
    return np.clip(np.rint(X), 0, levels) + 0.0, y


def load_labeled_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Features in all but the last column, integer class label in the last."""
    data = read_csv(path)
    if data.shape[1] < 2:
        raise ValidationError("labeled CSV needs at least one feature column and a label column")
    labels = data[:, -1]
    if not np.array_equal(labels, np.rint(labels)) or labels.min() < 0:
        raise ValidationError("labels must be nonnegative integers")
    return np.ascontiguousarray(data[:, :-1]), labels.astype(np.int64)


@dataclass
class TrainRow:
    run: str
    step: int
    multiply_time: float
    scalar_mults: int
    loss: float
    accuracy: float
    hidden_cardinality: int


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _train(X: np.ndarray, y: np.ndarray, k: Optional[int], steps: int, lr: float,
           hidden: int, seed: Optional[int], run: str) -> list[TrainRow]:
    n, d = X.shape
    classes = int(y.max()) + 1
    rng = np.random.default_rng(seed)
    W0 = rng.normal(scale=np.sqrt(2.0 / d), size=(hidden, d))
    b0 = np.zeros(hidden)
    W1 = rng.normal(scale=np.sqrt(2.0 / hidden), size=(classes, hidden))
    b1 = np.zeros(classes)
    onehot = np.eye(classes)[y]

    # the input never changes, so both of its compressions are built once
    Xc = compress_columns(X)
    _ = Xc.groups
    Xt = columns_as_rows(Xc)
    mult_time, mults = 0.0, 0
    rows = []
    for step in range(1, steps + 1):
        fwd = matmul.multiply_outer_compressed(Xc, compress_rows(np.ascontiguousarray(W0.T)))
        H = np.maximum(fwd.product + b0, 0.0)
        prob = _softmax(H @ W1.T + b1)
        loss = float(-np.mean(np.log(prob[np.arange(n), y] + 1e-300)))
        acc = float(np.mean(prob.argmax(axis=1) == y))

        dlogits = (prob - onehot) / n
        dW1 = dlogits.T @ H
        db1 = dlogits.sum(axis=0)
        dZ = (dlogits @ W1) * (H > 0)
        bwd = matmul.multiply_inner_compressed(Xt, np.ascontiguousarray(dZ))
        W0 = W0 - lr * bwd.product.T
        b0 = b0 - lr * dZ.sum(axis=0)
        W1 = W1 - lr * dW1
        b1 = b1 - lr * db1
        if k is not None:
            W0 = project_cardinality(W0, k)

        mult_time += fwd.wall_time + bwd.wall_time
        mults += fwd.scalar_mults + bwd.scalar_mults
        card = int(compress_columns(W0).uniques.max())
        rows.append(TrainRow(run, step, mult_time, mults, loss, acc, card))
    return rows


def train_demo(X=None, y=None, k: int = 8, steps: int = 100, lr: float = 0.5, hidden: int = 40,
               seed: Optional[int] = 0) -> list[TrainRow]:
    """Two-layer ReLU network trained with and without the cardinality projection.

    The hidden layer's forward product uses the outer compressed kernel and
    its weight gradient the inner compressed kernel. In the projected run the
    hidden weights are projected to column cardinality ``k`` after every
    update. Inputs are scaled by their largest magnitude, which keeps their
    column cardinality.
    """
    if X is None:
        X, y = synthetic_blobs(seed=seed)
    X = as_matrix(X, "X")
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (X.shape[0],):
        raise ValidationError("one label per sample is required")
    scale = np.abs(X).max()
    if scale > 0:
        X = X / scale
    rows = _train(X, y, k, steps, lr, hidden, seed, "projected")
    rows += _train(X, y, None, steps, lr, hidden, seed, "unprojected")
    return rows


def write_rows_csv(rows: Sequence, stream: TextIO, drop: Sequence[str] = ()) -> None:
    if not rows:
        return
    fields = [f.name for f in dataclasses.fields(rows[0]) if f.name not in drop]
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        d = dataclasses.asdict(row)
        w.writerow([_fmt(d[f]) for f in fields])


# -- tensor regression demo --------------------------------------------------

@dataclass
class TensorDemoResult:
    loss_auto: float
    loss_naive: float
    time_auto: float
    time_naive: float
    preprocess_auto: float
    mults_auto: int
    mults_naive: int
    losses_match: bool


def tensorreg_demo(N: int = 1000, dims: Sequence[int] = (16, 16), k: int = 4, lam: float = 0.1,
                   nu: float = 1.0, iters: int = 10, seed: Optional[int] = 0,
                   noise: float = 0.1) -> TensorDemoResult:
    """Fit the same cardinality-sparse regression with compressed and naive products."""
    dims = tuple(int(d) for d in dims)
    if N < 1 or not dims or min(dims) < 1:
        raise ValidationError("N and dims must be positive")
    inner = int(np.prod(dims))
    Xm, _ = gen(N, inner, 1, k, seed=seed)
    X = Xm.reshape((N,) + dims)
    rng = np.random.default_rng(None if seed is None else seed + 1)
    B_true = rng.integers(1, 5, size=dims).astype(np.float64)
    Y = np.tensordot(X, B_true, axes=len(dims)) + noise * rng.standard_normal(N)
    L = len(dims)
    fa = tensor_regression_fit(X, Y, L, lam, nu, iters=iters, kernel="auto")
    fn = tensor_regression_fit(X, Y, L, lam, nu, iters=iters, kernel="naive")
    match = abs(fa.loss - fn.loss) <= 1e-8 * max(1.0, abs(fn.loss))
    return TensorDemoResult(loss_auto=fa.loss, loss_naive=fn.loss, time_auto=fa.multiply_time,
                            time_naive=fn.multiply_time, preprocess_auto=fa.preprocess_time,
                            mults_auto=fa.scalar_mults, mults_naive=fn.scalar_mults, losses_match=match)
