import io

import numpy as np
import pytest

from cardmul import cardinality_degree, memory_footprint, compress_columns
from cardmul.bench import (
    bench,
    gen,
    gen_binary,
    load_labeled_csv,
    memreport,
    strassen_mults,
    synthetic_blobs,
    tensorreg_demo,
    train_demo,
    write_bench_csv,
)
from cardmul.container import write_csv
from cardmul.errors import ValidationError


def test_gen_degree_one_is_constant():
    A, B = gen(5, 4, 6, 1, seed=0)
    assert np.unique(A).size == 1 and np.unique(B).size == 1


def test_gen_degree_bound_at_512():
    A, B = gen(512, 512, 512, 10, seed=1)
    assert cardinality_degree(A) <= 10
    assert cardinality_degree(B, "rows") <= 10


def test_gen_deterministic():
    a1, b1 = gen(9, 7, 5, 4, seed=42)
    a2, b2 = gen(9, 7, 5, 4, seed=42)
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_array_equal(b1, b2)
    # the shift is one draw shared by both matrices
    assert np.allclose(np.modf(a1)[0][0, 0] % 1, np.modf(b1)[0][0, 0] % 1)
    with pytest.raises(ValidationError):
        gen(2, 2, 2, 0)


def test_gen_binary():
    A, B = gen_binary(10, 6, 4, seed=3)
    assert set(np.unique(A)) <= {0.0, 1.0} and B.shape == (6, 4)


def test_bench_rows_pass_and_obey_counter_law():
    rows = bench([(40, 8, 40), (33, 50, 21)], [1, 4, 9], kernels=("naive", "strassen", "outer", "inner", "auto"),
                 repeats=2, seed=5)
    assert len(rows) == 2 * (3 * 5 + 2)
    assert all(r.passed for r in rows)
    for r in rows:
        assert r.scalar_mults <= r.mult_bound
        if r.kernel == "naive":
            assert r.scalar_mults == r.M * r.P * r.N
        if r.kernel == "binary":
            assert r.rel_error == 0.0


def test_strassen_count_model():
    assert strassen_mults(2, 2, 2, cutoff=1) == 7
    assert strassen_mults(100, 100, 100, cutoff=64) == 7 * 64 ** 3


def test_naive_ratio_near_one():
    rows = bench([(64, 64, 64)], [5], kernels=("naive",), repeats=5, binary=False)
    assert 0.2 < rows[0].speedup < 5


def test_work_ratio_falls_with_degree():
    rows = bench([(2000, 40, 2000)], range(1, 11), kernels=("naive", "outer"), repeats=1, binary=False)
    outer = [r for r in rows if r.kernel == "outer"]
    ratios = [r.M * r.P * r.N / r.scalar_mults for r in outer]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_bench_csv_is_reproducible():
    def run():
        buf = io.StringIO()
        write_bench_csv(bench([(20, 6, 18)], [2, 3], kernels=("naive", "outer", "inner"), repeats=2, seed=9),
                        buf, timings=False)
        return buf.getvalue()

    first = run()
    assert first == run()
    assert first.splitlines()[0] == "kernel,M,P,N,k,scalar_mults,mult_bound,rel_error,passed"
    buf = io.StringIO()
    write_bench_csv(bench([(8, 4, 8)], [2], repeats=1), buf)
    assert "multiply_time" in buf.getvalue().splitlines()[0]


def test_bench_rejects_unknown_kernel():
    with pytest.raises(ValidationError):
        bench([(4, 4, 4)], [2], kernels=("fft",))


def test_memreport_constant_columns():
    rep = memreport(np.ones((100, 10)) * np.arange(10))
    assert rep["compressed_minimal_bits"] * 8 <= rep["dense_minimal_bits"]


def test_memreport_distinct_entries(rng):
    rep = memreport(rng.normal(size=(20, 5)))
    assert rep["compressed_minimal_bits"] >= rep["dense_minimal_bits"]
    assert rep["compressed_fixed32"] >= rep["dense_fixed32"]


def test_memreport_matches_codec(rng):
    W = np.take_along_axis(rng.normal(size=(3, 8)), rng.integers(0, 3, (1000, 8)), axis=0)
    rep = memreport(W)
    c = compress_columns(W)
    assert rep["compressed_minimal_bits"] == memory_footprint(c, "minimal-bits")
    assert rep["compressed_fixed32"] == memory_footprint(c, "fixed32")
    assert rep["dense_fixed32"] == 32 * 8000
    assert rep["max_uniques"] == 3


def test_train_identity_projection_matches_unprojected():
    rows = train_demo(k=40, steps=15, seed=1)
    proj = [r for r in rows if r.run == "projected"]
    plain = [r for r in rows if r.run == "unprojected"]
    assert [(r.loss, r.accuracy, r.scalar_mults) for r in proj] == [(r.loss, r.accuracy, r.scalar_mults) for r in plain]


def test_train_projection_keeps_cardinality():
    rows = train_demo(k=8, steps=20, seed=2)
    proj = [r for r in rows if r.run == "projected"]
    assert all(r.hidden_cardinality <= 8 for r in proj)
    assert proj[-1].accuracy > 0.9


def test_train_on_digits_csv(tmp_path):
    datasets = pytest.importorskip("sklearn.datasets")
    digits = datasets.load_digits()
    path = tmp_path / "digits.csv"
    write_csv(path, np.column_stack([digits.data, digits.target]))
    X, y = load_labeled_csv(path)
    assert cardinality_degree(X) <= 17
    rows = train_demo(X, y, k=8, steps=100, seed=0)
    proj = [r for r in rows if r.run == "projected"]
    plain = [r for r in rows if r.run == "unprojected"]
    assert proj[-1].accuracy >= 0.8 and plain[-1].accuracy >= 0.8
    assert proj[-1].scalar_mults < plain[-1].scalar_mults


def test_labeled_csv_validation(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,0.5\n3,4,1\n")
    with pytest.raises(ValidationError):
        load_labeled_csv(path)


def test_synthetic_blobs_low_cardinality():
    X, y = synthetic_blobs(n=300, features=5, levels=16, seed=0)
    assert cardinality_degree(X) <= 17
    assert set(np.unique(y)) == {0, 1, 2}


def test_tensorreg_demo_default():
    res = tensorreg_demo()
    assert res.losses_match
    assert res.loss_auto == pytest.approx(res.loss_naive, rel=1e-8)
    assert res.mults_auto < res.mults_naive


def test_tensorreg_demo_least_squares():
    res = tensorreg_demo(N=60, dims=(3,), k=4, lam=0.0, iters=3000, seed=2)
    Xm, _ = gen(60, 3, 1, 4, seed=2)
    rng = np.random.default_rng(3)
    B = rng.integers(1, 5, size=(3,)).astype(float)
    Y = Xm @ B + 0.1 * rng.standard_normal(60)
    beta = np.linalg.lstsq(Xm, Y, rcond=None)[0]
    assert res.loss_auto == pytest.approx(np.sum((Xm @ beta - Y) ** 2), rel=1e-6)


def test_tensorreg_demo_degree_one_work():
    res = tensorreg_demo(k=1, iters=10)
    # one label per row: N multiplies per forward product, P per adjoint product
    assert res.mults_auto == 11 * 1000 + 10 * 256
