import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cardmul import (
    Kernel,
    choose_kernel,
    compress_binary,
    compress_columns,
    compress_rows,
    multiply_auto,
    multiply_binary,
    multiply_inner_compressed,
    multiply_naive,
    multiply_outer_compressed,
    multiply_strassen,
    relative_error,
)
from cardmul.bench import gen, gen_binary
from cardmul.core import RowCompressed
from cardmul.errors import DimensionMismatch, DomainError, ValidationError

from conftest import A_BIN, V_EX, W_EX


def loop_oracle(A, B):
    M, P = len(A), len(A[0])
    N = len(B[0])
    return np.array([[sum(A[i][k] * B[k][j] for k in range(P)) for j in range(N)] for i in range(M)])


def test_naive_worked_pair():
    rep = multiply_naive(W_EX, V_EX)
    assert rep.scalar_mults == 48
    assert rep.kernel is Kernel.NAIVE
    np.testing.assert_allclose(rep.product, W_EX @ V_EX, rtol=1e-15)


def test_naive_identity_and_oracle(rng):
    X = rng.normal(size=(3, 7))
    np.testing.assert_array_equal(multiply_naive(np.eye(3), X).product, X)
    A, B = rng.normal(size=(4, 3)), rng.normal(size=(3, 5))
    np.testing.assert_allclose(multiply_naive(A, B).product, loop_oracle(A.tolist(), B.tolist()), rtol=1e-14)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        multiply_naive(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(DimensionMismatch):
        multiply_outer_compressed(compress_columns(np.ones((2, 3))), compress_rows(np.ones((2, 3))))
    with pytest.raises(DimensionMismatch):
        multiply_inner_compressed(compress_rows(np.ones((2, 3))), np.ones((2, 3)))
    with pytest.raises(DimensionMismatch):
        multiply_binary(compress_binary(np.ones((2, 3))), np.ones((2, 3)))
    with pytest.raises(DimensionMismatch):
        multiply_auto(np.ones((2, 3)), np.ones((2, 3)))


def test_strassen_small_count():
    rep = multiply_strassen(np.ones((2, 2)), np.ones((2, 2)), cutoff=1)
    np.testing.assert_array_equal(rep.product, np.full((2, 2), 2.0))
    assert rep.scalar_mults == 7


@pytest.mark.parametrize("n", [64, 48])
def test_strassen_matches_naive(rng, n):
    A, B = rng.normal(size=(n, n)), rng.normal(size=(n, n))
    for cutoff in (64, 8):
        rep = multiply_strassen(A, B, cutoff=cutoff)
        assert relative_error(rep.product, multiply_naive(A, B).product) <= 1e-9


def test_strassen_rectangular_and_cutoff_validation(rng):
    A, B = rng.normal(size=(5, 9)), rng.normal(size=(9, 3))
    assert relative_error(multiply_strassen(A, B, cutoff=2).product, A @ B) <= 1e-9
    with pytest.raises(ValidationError):
        multiply_strassen(A, B, cutoff=0)


def test_outer_worked_pair():
    rep = multiply_outer_compressed(compress_columns(W_EX), compress_rows(V_EX))
    assert rep.scalar_mults == 12
    assert rep.kernel is Kernel.OUTER
    assert relative_error(rep.product, multiply_naive(W_EX, V_EX).product) <= 1e-15


def test_outer_degree_one_costs_p():
    W = np.ones((7, 4)) * np.arange(1, 5)
    V = np.ones((4, 6)) * np.arange(1, 5)[:, None]
    rep = multiply_outer_compressed(compress_columns(W), compress_rows(V))
    assert rep.scalar_mults == 4
    np.testing.assert_array_equal(rep.product, W @ V)


def test_outer_random_and_counter(rng):
    A, B = gen(30, 6, 25, 4, seed=3)
    Wc, Vc = compress_columns(A), compress_rows(B)
    rep = multiply_outer_compressed(Wc, Vc)
    assert relative_error(rep.product, multiply_naive(A, B).product) <= 1e-10
    assert rep.scalar_mults == int(np.dot(Wc.uniques, Vc.uniques))
    assert rep.scalar_mults <= Wc.max_uniques * 6 * Vc.max_uniques


def test_outer_permuted_order_and_threads(rng):
    A, B = gen(40, 12, 33, 5, seed=4)
    Wc, Vc = compress_columns(A), compress_rows(B)
    ref = multiply_outer_compressed(Wc, Vc)
    perm = multiply_outer_compressed(Wc, Vc, j_order=rng.permutation(12))
    threaded = multiply_outer_compressed(Wc, Vc, threads=4)
    assert relative_error(perm.product, ref.product) <= 1e-10
    assert relative_error(threaded.product, ref.product) <= 1e-10
    assert threaded.scalar_mults == ref.scalar_mults
    with pytest.raises(ValidationError):
        multiply_outer_compressed(Wc, Vc, j_order=[0] * 12)


def test_inner_worked_row():
    Wr = RowCompressed(values=np.array([[1.1, 2.3]]), codes=np.array([[0, 0, 1, 0, 1]]), uniques=[2])
    rep = multiply_inner_compressed(Wr, np.arange(1.0, 6.0)[:, None])
    assert rep.product[0, 0] == pytest.approx(26.1, rel=1e-15)
    assert rep.scalar_mults == 2


def test_inner_constant_row():
    rep = multiply_inner_compressed(compress_rows(np.full((1, 5), 2.5)), np.arange(5.0)[:, None])
    assert rep.product[0, 0] == 2.5 * 10
    assert rep.scalar_mults == 1


def test_inner_random(rng):
    A = np.take_along_axis(rng.normal(size=(8, 5)), rng.integers(0, 5, (8, 200)), axis=1)
    B = rng.normal(size=(200, 6))
    rep = multiply_inner_compressed(compress_rows(A), B)
    assert relative_error(rep.product, multiply_naive(A, B).product) <= 1e-10
    assert rep.scalar_mults <= 6 * 8 * 5
    threaded = multiply_inner_compressed(compress_rows(A), B, threads=3)
    np.testing.assert_array_equal(threaded.product, rep.product)


def test_binary_example_times_transpose():
    rep = multiply_binary(compress_binary(A_BIN), A_BIN.T)
    assert rep.product.dtype == np.int64
    np.testing.assert_array_equal(rep.product, (A_BIN @ A_BIN.T).astype(int))


def test_binary_permutation(rng):
    Pm = np.eye(6)[rng.permutation(6)]
    B = (rng.random((6, 9)) < 0.4).astype(float)
    np.testing.assert_array_equal(multiply_binary(compress_binary(Pm), B).product, Pm @ B)


def test_binary_random_exact(rng):
    A, B = gen_binary(64, 64, 64, seed=1)
    rep = multiply_binary(compress_binary(A), compress_binary(B))
    np.testing.assert_array_equal(rep.product, multiply_naive(A, B).product)
    assert rep.scalar_mults <= 2 * 64 * 2


def test_binary_rejects_bad_operands():
    with pytest.raises(DomainError):
        multiply_binary(compress_binary(A_BIN), np.full((3, 2), 0.5))
    with pytest.raises(ValidationError):
        multiply_binary(A_BIN, A_BIN.T)


def test_dispatch_rule():
    assert choose_kernel(2000, 40, 2000) is Kernel.OUTER
    assert choose_kernel(100, 10000, 100) is Kernel.INNER
    assert choose_kernel(8, 8, 8, binary=True) is Kernel.BINARY
    A, B = gen(60, 5, 70, 3, seed=0)
    assert multiply_auto(A, B).kernel is Kernel.OUTER
    A, B = gen(6, 50, 7, 3, seed=0)
    assert multiply_auto(A, B).kernel is Kernel.INNER
    A, B = gen_binary(16, 16, 16, seed=0)
    rep = multiply_auto(A, B)
    assert rep.kernel is Kernel.BINARY
    np.testing.assert_array_equal(rep.product, A @ B)


def test_auto_reports_preprocessing():
    A, B = gen(200, 10, 200, 4, seed=1)
    rep = multiply_auto(A, B)
    assert rep.preprocess_time > 0
    assert relative_error(rep.product, multiply_naive(A, B).product) <= 1e-10


def test_outer_work_monotone_in_degree():
    counts = []
    for k in range(1, 11):
        A, B = gen(64, 16, 64, k, seed=7)
        counts.append(multiply_outer_compressed(compress_columns(A), compress_rows(B)).scalar_mults)
    assert counts == sorted(counts)


@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 40), st.integers(1, 10),
       st.integers(0, 2**31))
def test_all_kernels_match_naive(M, P, N, k, seed):
    A, B = gen(M, P, N, k, seed=seed)
    ref = multiply_naive(A, B)
    assert ref.scalar_mults == M * P * N
    Wc, Vc = compress_columns(A), compress_rows(B)
    outer = multiply_outer_compressed(Wc, Vc)
    assert relative_error(outer.product, ref.product) <= 1e-10
    assert outer.scalar_mults <= Wc.max_uniques * P * Vc.max_uniques
    assert relative_error(multiply_inner_compressed(compress_rows(A), B).product, ref.product) <= 1e-10
    assert relative_error(multiply_auto(A, B).product, ref.product) <= 1e-10
    assert relative_error(multiply_strassen(A, B, cutoff=8).product, ref.product) <= 1e-9
    Ab, Bb = gen_binary(M, P, N, seed=seed)
    np.testing.assert_array_equal(multiply_binary(compress_binary(Ab), Bb).product, Ab @ Bb)
