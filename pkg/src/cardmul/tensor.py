"""Mode-n products, contracted products and cardinality-regularized tensor regression.

Modes are 1-based. ``contracted_product(X, Y, L)`` sums over the last ``L``
modes of ``X`` against the first ``L`` modes of ``Y``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from . import matmul
from .codec import columns_as_rows, compress_columns, compress_rows
from .core import as_matrix, as_tensor
from .errors import DimensionMismatch, DomainError, ModeError, ValidationError
from .sparsity import DifferenceOperator, difference_operator

FitKernel = Literal["numpy", "naive", "auto"]


def _axis(n: int, order: int) -> int:
    if not 1 <= n <= order:
        raise ModeError(f"mode {n} out of range for order-{order} tensor")
    return n - 1


def mode_n_product(T, U, n: int) -> np.ndarray:
    """``(T x_n U)[..., j, ...] = sum_q T[..., q, ...] U[j, q]``."""
    T = as_tensor(T, "T")
    U = as_matrix(U, "U")
    ax = _axis(n, T.ndim)
    if U.shape[1] != T.shape[ax]:
        raise DimensionMismatch(f"U has {U.shape[1]} columns, mode {n} has extent {T.shape[ax]}")
    return np.ascontiguousarray(np.moveaxis(np.tensordot(U, T, axes=(1, ax)), 0, ax))


def _along(T: np.ndarray, ax: int, fn) -> np.ndarray:
    moved = np.moveaxis(T, ax, 0)
    out = fn(moved.reshape(moved.shape[0], -1))
    return np.ascontiguousarray(np.moveaxis(out.reshape((out.shape[0],) + moved.shape[1:]), 0, ax))


def difference_tensor(T, n: int) -> np.ndarray:
    """``T x_n A`` with the difference operator of the mode-``n`` extent."""
    T = as_tensor(T, "T")
    ax = _axis(n, T.ndim)
    op = difference_operator(T.shape[ax])
    return _along(T, ax, op.apply)


def contracted_product(X, Y, L: int) -> np.ndarray:
    X = as_tensor(X, "X")
    Y = as_tensor(Y, "Y")
    if not 0 <= L <= min(X.ndim, Y.ndim):
        raise DimensionMismatch(f"cannot contract {L} modes of orders {X.ndim} and {Y.ndim}")
    if X.shape[X.ndim - L:] != Y.shape[:L]:
        raise DimensionMismatch(f"trailing dims {X.shape[X.ndim - L:]} of X differ from leading dims {Y.shape[:L]} of Y")
    return np.tensordot(X, Y, axes=L)


def effective_noise_s(X, N: Optional[int] = None) -> float:
    """Twice the largest diagonal entry of ``<X, X>_1`` divided by ``N``."""
    X = as_tensor(X, "X")
    if N is None:
        N = X.shape[0]
    if N != X.shape[0]:
        raise DimensionMismatch(f"first mode has extent {X.shape[0]}, not N={N}")
    diag = np.einsum("i...,i...->...", X, X)
    return float(2.0 * np.abs(diag).max() / N)


def _check_fit_shapes(X: np.ndarray, Y: np.ndarray, L: int) -> tuple[int, ...]:
    lead = X.ndim - L
    if L < 1 or lead < 1:
        raise DimensionMismatch("need 1 <= L < order of X")
    if Y.shape[:lead] != X.shape[:lead]:
        raise DimensionMismatch(f"leading dims {Y.shape[:lead]} of Y differ from {X.shape[:lead]} of X")
    return X.shape[lead:] + Y.shape[lead:]


def data_loss(X, Y, B, L: int) -> float:
    R = contracted_product(X, B, L) - np.asarray(Y, dtype=np.float64)
    return float(np.sum(R * R))


def data_gradient(X, Y, B, L: int) -> np.ndarray:
    """Gradient of ``||Y - <X, B>_L||_F^2`` in ``B``: ``2 <X^T, <X, B>_L - Y>``."""
    X = as_tensor(X, "X")
    lead = X.ndim - L
    R = contracted_product(X, B, L) - np.asarray(Y, dtype=np.float64)
    return 2.0 * np.tensordot(X, R, axes=(list(range(lead)), list(range(lead))))


def _mode_mean(B: np.ndarray, ax: int) -> np.ndarray:
    ref = np.take(B, [0], axis=ax)
    return np.broadcast_to(ref + (B - ref).mean(axis=ax, keepdims=True), B.shape)


def tensor_h(B, n: int, nu: float) -> float:
    """``||B x_n A||_1 + nu ||Pi B||_1``; Pi averages the mode-``n`` fibers."""
    B = as_tensor(B, "B")
    ax = _axis(n, B.ndim)
    diff = difference_tensor(B, n) if B.shape[ax] >= 2 else np.zeros(0)
    return float(np.abs(diff).sum() + nu * np.abs(_mode_mean(B, ax)).sum())


def _h_subgradient(B: np.ndarray, ax: int, nu: float, op: Optional[DifferenceOperator]) -> np.ndarray:
    g = np.zeros_like(B)
    if op is not None:
        g += _along(np.sign(_along(B, ax, op.apply)), ax, op.apply_transpose)
    # Pi is symmetric, so its pullback is Pi again
    g += nu * _mode_mean(np.sign(_mode_mean(B, ax)), ax)
    return g


@dataclass
class TensorFit:
    coef: np.ndarray
    objective: list = field(default_factory=list)
    loss: float = 0.0
    scalar_mults: int = 0
    multiply_time: float = 0.0
    preprocess_time: float = 0.0


class _Products:
    """Forward ``Xm @ Bm`` and adjoint ``Xm.T @ Rm`` on the unfolded design."""

    def __init__(self, Xm: np.ndarray, kernel: FitKernel):
        self.Xm = Xm
        self.kernel = kernel
        self.mults = 0
        self.mult_time = 0.0
        self.prep_time = 0.0
        if kernel == "auto":
            t0 = time.perf_counter()
            self.fwd = compress_rows(Xm)
            self.adj = columns_as_rows(compress_columns(Xm))
            self.prep_time = time.perf_counter() - t0
        elif kernel not in ("numpy", "naive"):
            raise ValidationError(f"unknown kernel {kernel!r}")

    def _run(self, left: np.ndarray, compressed, B: np.ndarray) -> np.ndarray:
        M, P = left.shape
        N = B.shape[1]
        if self.kernel == "numpy":
            t0 = time.perf_counter()
            out = left @ B
            self.mult_time += time.perf_counter() - t0
            self.mults += M * P * N
            return out
        if self.kernel == "naive":
            rep = matmul.multiply_naive(left, B)
        elif matmul.choose_kernel(M, P, N) is matmul.Kernel.OUTER:
            t0 = time.perf_counter()
            Wc = compress_columns(left)
            Vc = compress_rows(B)
            self.prep_time += time.perf_counter() - t0
            rep = matmul.multiply_outer_compressed(Wc, Vc)
        else:
            rep = matmul.multiply_inner_compressed(compressed, B)
        self.mults += rep.scalar_mults
        self.mult_time += rep.wall_time
        return rep.product

    def forward(self, Bm: np.ndarray) -> np.ndarray:
        return self._run(self.Xm, getattr(self, "fwd", None), Bm)

    def adjoint(self, Rm: np.ndarray) -> np.ndarray:
        return self._run(np.ascontiguousarray(self.Xm.T), getattr(self, "adj", None), Rm)


def tensor_regression_fit(X, Y, L: int, lam: float, nu: float = 1.0, mode: int = 1,
                          step: Optional[float] = None, iters: int = 100,
                          kernel: FitKernel = "numpy") -> TensorFit:
    """Subgradient descent on ``||Y - <X, B>_L||_F^2 + lam * h[B]`` from ``B = 0``.

    Parameters
    ----------
    X, Y : array_like
        Design tensor ``N x P_1 x ... x P_L`` and response ``N x Q...``.
    L : int
        Number of contracted modes.
    lam, nu : float
        Regularization weight and kernel-term weight of ``h``.
    mode : int
        1-based mode of ``B`` whose fibers the regularizer differences.
    step : float, optional
        Fixed step size; defaults to ``1 / (2 sigma_max^2)`` of the unfolded
        design, the inverse Lipschitz constant of the data gradient.
    iters : int
        Number of steps.
    kernel : {"numpy", "naive", "auto"}
        How the unfolded matrix products are computed. ``"auto"`` compresses
        the design once and uses the compressed kernels.

    Returns
    -------
    TensorFit
        Final iterate, per-iteration objective (starting at ``B = 0``),
        final data loss and multiplication counters.
    """
    X = as_tensor(X, "X")
    Y = as_tensor(Y, "Y")
    if lam < 0 or nu < 0:
        raise DomainError("lam and nu must be nonnegative")
    if iters < 0:
        raise DomainError("iters must be nonnegative")
    bshape = _check_fit_shapes(X, Y, L)
    lead = X.ndim - L
    rows = int(np.prod(X.shape[:lead]))
    inner = int(np.prod(X.shape[lead:]))
    Xm = np.ascontiguousarray(X.reshape(rows, inner))
    Ym = Y.reshape(rows, -1)
    if step is None:
        sigma = np.linalg.norm(Xm, 2)
        step = 1.0 / (2.0 * sigma * sigma) if sigma > 0 else 1.0
    if step <= 0:
        raise DomainError("step must be positive")
    ax = _axis(mode, len(bshape))
    op = difference_operator(bshape[ax]) if bshape[ax] >= 2 else None

    prods = _Products(Xm, kernel)
    B = np.zeros(bshape)

    def objective(R: np.ndarray, B: np.ndarray) -> float:
        loss = float(np.sum(R * R))
        return loss + (lam * tensor_h(B, mode, nu) if lam > 0 else 0.0)

    R = prods.forward(B.reshape(inner, -1)) - Ym
    history = [objective(R, B)]
    for _ in range(iters):
        grad = 2.0 * prods.adjoint(np.ascontiguousarray(R)).reshape(bshape)
        if lam > 0:
            grad += lam * _h_subgradient(B, ax, nu, op)
        B = B - step * grad
        R = prods.forward(np.ascontiguousarray(B.reshape(inner, -1))) - Ym
        history.append(objective(R, B))
    return TensorFit(coef=B, objective=history, loss=float(np.sum(R * R)),
                     scalar_mults=prods.mults, multiply_time=prods.mult_time,
                     preprocess_time=prods.prep_time)
