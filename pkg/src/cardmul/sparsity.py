"""Difference operators, the cardinality regularizer and its projections.

Row indices are 0-based throughout. A plain difference operator on ``p``
rows holds every unordered pair once. Pairs are laid out cyclically: for
offset ``d = 1..p//2`` and ``i = 0..p-1`` the row is ``e_i - e_{(i+d) % p}``
(for even ``p`` the half-way offset only runs ``i < p/2``). For ``p = 3``
this is ``[[1,-1,0],[0,1,-1],[-1,0,1]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .core import as_matrix
from .errors import DimensionMismatch, DomainError, ValidationError


@dataclass(frozen=True, eq=False)
class DifferenceOperator:
    """Matrix-free signed pair operator ``weight * (e_plus - e_minus)``."""

    p: int
    plus: np.ndarray
    minus: np.ndarray
    weight: float = 1.0

    @property
    def rows(self) -> int:
        return int(self.plus.shape[0])

    def materialize(self) -> np.ndarray:
        A = np.zeros((self.rows, self.p))
        r = np.arange(self.rows)
        A[r, self.plus] = self.weight
        A[r, self.minus] = -self.weight
        return A

    def apply(self, W) -> np.ndarray:
        W = np.asarray(W, dtype=np.float64)
        if W.shape[0] != self.p:
            raise DimensionMismatch(f"operator acts on {self.p} rows, got {W.shape[0]}")
        out = W[self.plus] - W[self.minus]
        if self.weight != 1.0:
            out *= self.weight
        return out

    def apply_transpose(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.float64)
        if Y.shape[0] != self.rows:
            raise DimensionMismatch(f"transpose expects {self.rows} rows, got {Y.shape[0]}")
        out = np.zeros((self.p,) + Y.shape[1:])
        np.add.at(out, self.plus, Y)
        np.subtract.at(out, self.minus, Y)
        if self.weight != 1.0:
            out *= self.weight
        return out


def _pairs(p: int) -> tuple[np.ndarray, np.ndarray]:
    plus, minus = [], []
    for d in range(1, p // 2 + 1):
        span = p // 2 if 2 * d == p else p
        i = np.arange(span)
        plus.append(i)
        minus.append((i + d) % p)
    if not plus:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy()
    return np.concatenate(plus).astype(np.int64), np.concatenate(minus).astype(np.int64)


def difference_operator(p: int, weight: float = 1.0) -> DifferenceOperator:
    if p < 2:
        raise DomainError(f"difference operator needs p >= 2, got {p}")
    plus, minus = _pairs(p)
    return DifferenceOperator(p=p, plus=plus, minus=minus, weight=float(weight))


def apply_difference(op: DifferenceOperator, W) -> np.ndarray:
    return op.apply(as_matrix(W, "W"))


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """Partition of the rows ``0..p-1`` into groups with parameter counts.

    Group ``i`` is weighted by ``sqrt(param_counts[i])``.
    """

    partitions: tuple
    param_counts: np.ndarray

    def __post_init__(self):
        parts = tuple(np.asarray(g, dtype=np.int64).ravel() for g in self.partitions)
        counts = np.asarray(self.param_counts, dtype=np.float64).ravel()
        if not parts:
            raise ValidationError("GroupSpec needs at least one group")
        if counts.shape[0] != len(parts):
            raise ValidationError("one parameter count per group is required")
        if np.any(counts <= 0):
            raise DomainError("parameter counts must be positive")
        if any(g.size == 0 for g in parts):
            raise ValidationError("groups must be nonempty")
        flat = np.sort(np.concatenate(parts))
        if not np.array_equal(flat, np.arange(flat.size)):
            raise ValidationError("groups must be disjoint and cover 0..p-1")
        object.__setattr__(self, "partitions", parts)
        object.__setattr__(self, "param_counts", counts)

    @classmethod
    def whole(cls, p: int, param_count: float = 1.0) -> "GroupSpec":
        """A single group over all ``p`` rows."""
        return cls(partitions=(np.arange(p),), param_counts=np.array([param_count]))

    @property
    def p(self) -> int:
        return int(sum(g.size for g in self.partitions))

    @property
    def weights(self) -> np.ndarray:
        return np.sqrt(self.param_counts)

    def operators(self) -> list[tuple[np.ndarray, DifferenceOperator]]:
        """(group rows, weighted operator) for every group with at least two rows."""
        return [(g, difference_operator(g.size, w))
                for g, w in zip(self.partitions, self.weights) if g.size >= 2]

    def materialize(self) -> np.ndarray:
        blocks = []
        for g, op in self.operators():
            blk = np.zeros((op.rows, self.p))
            blk[:, g] = op.materialize()
            blocks.append(blk)
        return np.vstack(blocks) if blocks else np.zeros((0, self.p))


@dataclass(eq=False)
class ParamStack:
    """Weight matrices ``(W^L, ..., W^0)``; ``W^l`` has shape ``p_{l+1} x p_l``."""

    layers: list = field(default_factory=list)

    def __post_init__(self):
        self.layers = [as_matrix(W, f"layer {i}") for i, W in enumerate(self.layers)]
        if not self.layers:
            raise ValidationError("ParamStack needs at least one layer")
        for i in range(len(self.layers) - 1):
            if self.layers[i].shape[1] != self.layers[i + 1].shape[0]:
                raise DimensionMismatch(
                    f"layer {i} has {self.layers[i].shape[1]} columns but layer {i + 1} has "
                    f"{self.layers[i + 1].shape[0]} rows")

    @property
    def dims(self) -> list[int]:
        """``p_0, ..., p_{L+1}``."""
        return [self.layers[-1].shape[1]] + [W.shape[0] for W in reversed(self.layers)]

    def __len__(self) -> int:
        return len(self.layers)

    def __add__(self, other: "ParamStack") -> "ParamStack":
        return ParamStack([a + b for a, b in zip(self.layers, other.layers)])

    def scale(self, alpha: float) -> "ParamStack":
        return ParamStack([alpha * W for W in self.layers])


Spec = Optional[GroupSpec]


def grouped_difference(spec: GroupSpec, W) -> np.ndarray:
    """Block-diagonal weighted differences. Singleton groups contribute no rows."""
    W = as_matrix(W, "W")
    if spec.p != W.shape[0]:
        raise DimensionMismatch(f"groups cover {spec.p} rows, matrix has {W.shape[0]}")
    parts = [op.apply(W[g]) for g, op in spec.operators()]
    return np.vstack(parts) if parts else np.zeros((0, W.shape[1]))


def _difference(W: np.ndarray, spec: Spec) -> np.ndarray:
    if spec is not None:
        return grouped_difference(spec, W)
    if W.shape[0] < 2:
        return np.zeros((0, W.shape[1]))
    return difference_operator(W.shape[0]).apply(W)


def _block_mean(block: np.ndarray) -> np.ndarray:
    # offset by the first row so constant blocks come back bit-exact
    ref = block[0]
    mean = ref + (block - ref).mean(axis=0)
    return np.clip(mean, block.min(axis=0), block.max(axis=0))


def project_kernel(W, spec: Spec = None) -> np.ndarray:
    """Orthogonal projection onto group-wise constant columns (column means)."""
    W = as_matrix(W, "W")
    if spec is None:
        return np.broadcast_to(_block_mean(W), W.shape).copy()
    if spec.p != W.shape[0]:
        raise DimensionMismatch(f"groups cover {spec.p} rows, matrix has {W.shape[0]}")
    out = np.empty_like(W)
    for g in spec.partitions:
        out[g] = _block_mean(W[g])
    return out


def _specs(specs, n: int) -> list:
    if specs is None or isinstance(specs, GroupSpec):
        return [specs] * n
    specs = list(specs)
    if len(specs) != n:
        raise ValidationError(f"expected {n} group specs, got {len(specs)}")
    return specs


def regularizer_h(theta: Union[ParamStack, Sequence], nu: float,
                  specs: Union[Spec, Sequence[Spec]] = None) -> float:
    """``sum_l ||A^l W^l||_1 + nu * sum_l ||Pi W^l||_1`` with the entrywise 1-norm."""
    if nu <= 0:
        raise DomainError("nu must be positive")
    if not isinstance(theta, ParamStack):
        theta = ParamStack(list(theta))
    total = 0.0
    for W, spec in zip(theta.layers, _specs(specs, len(theta))):
        total += np.abs(_difference(W, spec)).sum()
        total += nu * np.abs(project_kernel(W, spec)).sum()
    return float(total)


def project_cardinality(W, k: int) -> np.ndarray:
    """Sort each column, split it into ``k`` contiguous partitions and replace
    every value by its partition mean.

    Partition sizes differ by at most one, larger partitions first. Ties sort
    by row index. ``k`` above the row count is clipped to it.
    """
    W = as_matrix(W, "W")
    if k < 1:
        raise DomainError("k must be >= 1")
    M = W.shape[0]
    k = min(int(k), M)
    if k == M:
        return W.copy()
    order = np.argsort(W, axis=0, kind="stable")
    srt = np.take_along_axis(W, order, axis=0)
    out_sorted = np.empty_like(srt)
    base, extra = divmod(M, k)
    start = 0
    for i in range(k):
        stop = start + base + (1 if i < extra else 0)
        out_sorted[start:stop] = _block_mean(srt[start:stop])
        start = stop
    out = np.empty_like(W)
    np.put_along_axis(out, order, out_sorted, axis=0)
    return out


def one_to_one_norm(B) -> float:
    """Induced 1->1 norm: the largest absolute column sum."""
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.size == 0:
        raise ValidationError("one_to_one_norm needs a nonempty matrix")
    return float(np.abs(B).sum(axis=0).max())


def m_bound(param_count: Optional[float] = None, spec: Spec = None) -> float:
    """Upper bound on ``M_A``.

    Whole matrix: ``2 / sqrt(P_j)``. Grouped: ``max_i 2 / (sqrt(P_i) |B_i|)``
    over the groups of ``spec`` (their own parameter counts are used).
    """
    if spec is not None:
        sizes = np.array([g.size for g in spec.partitions], dtype=np.float64)
        return float(np.max(2.0 / (np.sqrt(spec.param_counts) * sizes)))
    if param_count is None or param_count <= 0:
        raise DomainError("param_count must be positive")
    return 2.0 / math.sqrt(param_count)


@dataclass(frozen=True)
class LambdaConfig:
    """Inputs of the tuning-parameter lower bound.

    ``nu`` defaults to ``1 / (1 - M_G)``; ``C`` is the abstract sub-Gaussian
    constant and defaults to 1.
    """

    a_lip: float
    L: int
    n: int
    P_total: int
    x_norm_n: float
    M_G: float
    C: float = 1.0
    nu: Optional[float] = None

    def __post_init__(self):
        for name in ("a_lip", "L", "n", "P_total", "x_norm_n", "C"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.M_G < 0:
            raise DomainError("M_G must be nonnegative")
        if self.nu is None:
            if self.M_G >= 1:
                raise DomainError("nu must be given when M_G >= 1")
            object.__setattr__(self, "nu", 1.0 / (1.0 - self.M_G))
        elif self.nu <= 0:
            raise DomainError("nu must be positive")
        elif self.M_G < 1 and self.nu < 1.0 / (1.0 - self.M_G):
            raise DomainError("nu must be at least 1/(1 - M_G)")


def lambda_bound(cfg: LambdaConfig) -> float:
    """C (M_G+1) a^{2L} x^2 (sqrt2/L)^{2L-1} sqrt(ln 2P) ln(2n) / sqrt(n), natural logs."""
    L = cfg.L
    return (cfg.C * (cfg.M_G + 1.0) * cfg.a_lip ** (2 * L) * cfg.x_norm_n ** 2
            * (math.sqrt(2.0) / L) ** (2 * L - 1)
            * math.sqrt(math.log(2.0 * cfg.P_total))
            * math.log(2.0 * cfg.n) / math.sqrt(cfg.n))
