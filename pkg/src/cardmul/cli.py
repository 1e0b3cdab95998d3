"""Command-line entry point: ``cardmul <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 I/O error or corrupt container.
The environment variable ``CARDMUL_SEED`` overrides every ``--seed``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import bench as bn
from . import matmul
from .codec import (
    compress_binary,
    compress_columns,
    compress_rows,
    decompress_binary,
    decompress_columns,
    decompress_rows,
)
from .container import format_csv, load_matrix, save_matrix
from .core import BinaryCompressed, ColCompressed, RowCompressed
from .errors import CorruptionError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3

KERNEL_CHOICES = ("naive", "strassen", "outer", "inner", "binary", "auto")


def _seed(args) -> Optional[int]:
    env = os.environ.get("CARDMUL_SEED")
    if env is not None and env != "":
        try:
            return int(env)
        except ValueError as exc:
            raise ValidationError(f"CARDMUL_SEED must be an integer, got {env!r}") from exc
    return args.seed


def _int_list(text: str) -> list[int]:
    """Parse ``"1-10"`` or ``"1,3,5"`` (or a mix, ``"1-3,8"``)."""
    out = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}")
    return out


def _size(text: str) -> tuple[int, int, int]:
    try:
        M, P, N = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like MxPxN, got {text!r}")
    return M, P, N


def _dense(obj) -> np.ndarray:
    if isinstance(obj, ColCompressed):
        return decompress_columns(obj)
    if isinstance(obj, RowCompressed):
        return decompress_rows(obj)
    if isinstance(obj, BinaryCompressed):
        return decompress_binary(obj)
    if np.ndim(obj) != 2:
        raise ValidationError("expected a matrix, got a tensor container")
    return obj


def cmd_gen(args) -> int:
    seed = _seed(args)
    if args.binary:
        A, B = bn.gen_binary(args.M, args.P, args.N, seed=seed, density=args.density)
    else:
        A, B = bn.gen(args.M, args.P, args.N, args.k, seed=seed)
    save_matrix(args.out_a, A)
    save_matrix(args.out_b, B)
    return EXIT_OK


def cmd_compress(args) -> int:
    W = _dense(load_matrix(args.input))
    if args.mode == "columns":
        obj = compress_columns(W, args.tolerance)
    elif args.mode == "rows":
        obj = compress_rows(W, args.tolerance)
    else:
        obj = compress_binary(W)
    if not args.output.lower().endswith(".csmm"):
        raise ValidationError("compressed output must be a .csmm container")
    save_matrix(args.output, obj)
    return EXIT_OK


def cmd_decompress(args) -> int:
    save_matrix(args.output, _dense(load_matrix(args.input)))
    return EXIT_OK


def _multiply(kernel: str, a, b, args) -> matmul.MultReport:
    if kernel == "outer" and isinstance(a, ColCompressed) and isinstance(b, RowCompressed):
        return matmul.multiply_outer_compressed(a, b, threads=args.threads)
    if kernel == "inner" and isinstance(a, RowCompressed):
        return matmul.multiply_inner_compressed(a, _dense(b), threads=args.threads)
    if kernel == "binary" and isinstance(a, BinaryCompressed):
        return matmul.multiply_binary(a, b if isinstance(b, BinaryCompressed) else _dense(b),
                                      threads=args.threads)
    A, B = _dense(a), _dense(b)
    if kernel == "auto":
        return matmul.multiply_auto(A, B, tolerance=args.tolerance, threads=args.threads)
    return bn.run_kernel(kernel, A, B, threads=args.threads, strassen_cutoff=args.cutoff)


def cmd_multiply(args) -> int:
    a, b = load_matrix(args.a), load_matrix(args.b)
    rep = _multiply(args.kernel, a, b, args)
    if args.out:
        save_matrix(args.out, np.asarray(rep.product, dtype=np.float64))
    else:
        sys.stdout.write(format_csv(rep.product))
    print(f"kernel={rep.kernel.value} scalar_mults={rep.scalar_mults} "
          f"preprocess_time={rep.preprocess_time:.6f} multiply_time={rep.wall_time:.6f}",
          file=sys.stderr)
    return EXIT_OK


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_bench(args) -> int:
    rows = bn.bench(args.sizes, args.degrees, kernels=args.kernels.split(","), repeats=args.repeats,
                    seed=_seed(args) or 0, binary=not args.no_binary, threads=args.threads)
    stream, close = _open_out(args.out)
    try:
        bn.write_bench_csv(rows, stream, timings=not args.no_timings)
    finally:
        if close:
            stream.close()
    return EXIT_OK if all(r.passed for r in rows) else EXIT_INVALID


def cmd_memreport(args) -> int:
    report = bn.memreport(_dense(load_matrix(args.input)), tolerance=args.tolerance)
    if args.json:
        print(json.dumps(report))
    else:
        for key, value in report.items():
            print(f"{key}: {value}")
    return EXIT_OK


def cmd_train_demo(args) -> int:
    if args.csv:
        X, y = bn.load_labeled_csv(args.csv)
    else:
        X, y = bn.synthetic_blobs(seed=_seed(args))
    rows = bn.train_demo(X, y, k=args.k, steps=args.epochs, lr=args.lr, hidden=args.hidden,
                         seed=_seed(args))
    stream, close = _open_out(args.out)
    try:
        bn.write_rows_csv(rows, stream, drop=() if not args.no_timings else ("multiply_time",))
    finally:
        if close:
            stream.close()
    return EXIT_OK


def cmd_tensorreg_demo(args) -> int:
    res = bn.tensorreg_demo(N=args.N, dims=args.dims, k=args.k, lam=args.lam, nu=args.nu,
                            iters=args.iters, seed=_seed(args))
    for key, value in dataclasses.asdict(res).items():
        print(f"{key}: {value}")
    return EXIT_OK if res.losses_match else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cardmul", description="Cardinality-sparse matrix tools.")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=0, help="RNG seed (CARDMUL_SEED overrides)")

    g = sub.add_parser("gen", help="generate a test pair A (MxP), B (PxN)")
    g.add_argument("-M", type=int, required=True)
    g.add_argument("-P", type=int, required=True)
    g.add_argument("-N", type=int, required=True)
    g.add_argument("-k", type=int, default=10, help="sparsity degree")
    g.add_argument("--binary", action="store_true", help="random 0/1 matrices instead")
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--out-a", required=True)
    g.add_argument("--out-b", required=True)
    seeded(g)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("compress", help="compress a matrix into a CSMM container")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--mode", choices=("columns", "rows", "binary"), default="columns")
    c.add_argument("--tolerance", type=float, default=0.0)
    c.set_defaults(func=cmd_compress)

    d = sub.add_parser("decompress", help="expand a CSMM container to a dense matrix")
    d.add_argument("input")
    d.add_argument("output")
    d.set_defaults(func=cmd_decompress)

    m = sub.add_parser("multiply", help="multiply two matrices")
    m.add_argument("a")
    m.add_argument("b")
    m.add_argument("--kernel", choices=KERNEL_CHOICES, default="auto")
    m.add_argument("--out", help="output file (CSV or .csmm); stdout CSV if omitted")
    m.add_argument("--tolerance", type=float, default=0.0)
    m.add_argument("--cutoff", type=int, default=64, help="Strassen cutoff")
    m.add_argument("--threads", type=int, default=1)
    m.set_defaults(func=cmd_multiply)

    b = sub.add_parser("bench", help="benchmark kernels against naive")
    b.add_argument("--sizes", type=_size, nargs="+", default=[(512, 512, 512)], metavar="MxPxN")
    b.add_argument("--degrees", type=_int_list, default=list(range(1, 11)))
    b.add_argument("--kernels", default="naive,strassen,outer,inner,auto")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--no-binary", action="store_true", help="skip the binary grid")
    b.add_argument("--no-timings", action="store_true", help="omit wall-clock columns")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--out", help="CSV output path; stdout if omitted")
    seeded(b)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("memreport", help="dense vs compressed storage bits")
    r.add_argument("input")
    r.add_argument("--tolerance", type=float, default=0.0)
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_memreport)

    t = sub.add_parser("train-demo", help="projected vs unprojected two-layer ReLU training")
    t.add_argument("--csv", help="labeled CSV (features..., label); synthetic blobs if omitted")
    t.add_argument("-k", type=int, default=8, help="projection degree")
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--lr", type=float, default=0.5)
    t.add_argument("--hidden", type=int, default=40)
    t.add_argument("--no-timings", action="store_true", help="omit the multiply_time column")
    t.add_argument("--out", help="metrics CSV path; stdout if omitted")
    seeded(t)
    t.set_defaults(func=cmd_train_demo)

    tr = sub.add_parser("tensorreg-demo", help="tensor regression with compressed vs naive products")
    tr.add_argument("-N", type=int, default=1000)
    tr.add_argument("--dims", type=_int_list, default=[16, 16])
    tr.add_argument("-k", type=int, default=4)
    tr.add_argument("--lam", type=float, default=0.1)
    tr.add_argument("--nu", type=float, default=1.0)
    tr.add_argument("--iters", type=int, default=10)
    seeded(tr)
    tr.set_defaults(func=cmd_tensorreg_demo)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CorruptionError as exc:
        print(f"cardmul: corrupt input: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"cardmul: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"cardmul: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
