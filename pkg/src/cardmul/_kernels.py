"""Compiled inner loops. Every kernel returns its scalar multiplication count."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def naive_kernel(a, b, out):
    # i, j, k loop order of the textbook triple loop
    M, P = a.shape
    N = b.shape[1]
    for i in range(M):
        for j in range(N):
            acc = 0.0
            for k in range(P):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return M * P * N


@njit(cache=True, nogil=True)
def outer_kernel(w_values, w_order, w_offsets, w_uniques, v_values, v_codes, v_uniques, js, out):
    """Accumulate sum_j D_j scattered through the column/row encodings.

    ``D_j = C_W[:, j] (x) C_V[j, :]`` is the only place values are multiplied.
    Row ``a`` of ``D_j`` is expanded along the row encoding of ``V`` once and
    added to every output row whose column-``j`` label is ``a``.
    """
    N = out.shape[1]
    n = v_values.shape[1]
    d = np.empty(n, dtype=out.dtype)
    e = np.empty(N, dtype=out.dtype)
    mults = 0
    for j in js:
        tj = v_uniques[j]
        for a in range(w_uniques[j]):
            wa = w_values[a, j]
            for b in range(tj):
                d[b] = wa * v_values[j, b]
            mults += tj
            for k in range(N):
                e[k] = d[v_codes[j, k]]
            for p in range(w_offsets[j, a], w_offsets[j, a + 1]):
                i = w_order[j, p]
                for k in range(N):
                    out[i, k] += e[k]
    return mults


@njit(cache=True, nogil=True)
def inner_kernel(w_values, w_codes, w_uniques, b, rows, out):
    """Row-encoded inner products: group-sum ``b`` by label, then one multiply per label."""
    P = w_codes.shape[1]
    N = b.shape[1]
    sums = np.zeros((w_values.shape[1], N))
    mults = 0
    for r in rows:
        s = w_uniques[r]
        sums[:s] = 0.0
        for p in range(P):
            a = w_codes[r, p]
            for c in range(N):
                sums[a, c] += b[p, c]
        for a in range(s):
            v = w_values[r, a]
            for c in range(N):
                out[r, c] += v * sums[a, c]
        mults += s * N
    return mults


_warm = False


def warmup():
    """Compile every kernel signature used by the library, outside any timer.

    Compressed types hold read-only arrays, which numba types separately.
    """
    global _warm
    if _warm:
        return

    def ro(a):
        a = a.copy()
        a.setflags(write=False)
        return a

    f = np.ones((1, 1))
    i = np.zeros((1, 1), dtype=np.int64)
    one = np.ones(1, dtype=np.int64)
    js = np.zeros(1, dtype=np.int64)
    off = np.array([[0, 1]], dtype=np.int64)
    naive_kernel(f, f, np.empty((1, 1)))
    outer_kernel(ro(f), i, off, ro(one), ro(f), ro(i), ro(one), js, np.zeros((1, 1)))
    outer_kernel(i + 1, i, off, one, i + 1, i, one, js, np.zeros((1, 1), dtype=np.int64))
    inner_kernel(ro(f), ro(i), ro(one), f, js, np.zeros((1, 1)))
    _warm = True
