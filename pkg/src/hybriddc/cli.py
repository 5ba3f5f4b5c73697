"""Command-line front end: ``gen``, ``solve``, ``bench`` and ``hss-test``.

Exit codes: 0 success, 1 usage or I/O error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import secrets
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import matgen
from .dc import PATHS, DCOptions, merge, solve, split, verify
from .flops import FlopCounter
from .hss import DenseSource, build_cluster_tree, compress_randomized, hss_diagnostics, hss_matmat, hss_to_dense
from .hss.compress import RNG_NAME
from .report import BENCH_COLUMNS, FORMAT_VERSION, build_report, plain

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2

TRIDIAGONAL_KINDS = ("clement", "hermite", "toeplitz211", "sht")
DENSE_KINDS = ("toeplitz-dense", "kinetic")
THREADS_ENV = "HYBRIDDC_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _generate(kind, n, m=None, d=0.1):
    """Matrix and input descriptor for a named generator."""
    desc = {"kind": kind, "n": n}
    if kind == "clement":
        return matgen.gen_clement(n), desc
    if kind == "hermite":
        return matgen.gen_hermite(n), desc
    if kind == "toeplitz211":
        return matgen.gen_toeplitz211(n), desc
    if kind == "sht":
        if m is None:
            raise UsageError("--m is required for --kind sht")
        desc["m"] = m
        return matgen.gen_sht(n, m), desc
    if kind == "toeplitz-dense":
        return matgen.gen_toeplitz_dense(n, "diag-dominant"), desc
    if kind == "kinetic":
        desc["d"] = d
        return matgen.gen_toeplitz_dense(n, "kinetic", d), desc
    raise UsageError(f"unknown generator {kind!r}")


def _load_input(args, allowed):
    if args.input is not None:
        if args.kind is not None:
            raise UsageError("give either --in or --kind, not both")
        A = matgen.read_matrix(args.input)
        return A, {"path": str(args.input), "sha256": matgen.file_checksum(args.input)}
    if args.kind is None:
        raise UsageError("one of --in or --kind is required")
    if args.kind not in allowed:
        raise UsageError(f"--kind must be one of {', '.join(allowed)}")
    if args.n is None:
        raise UsageError("--n is required with --kind")
    return _generate(args.kind, args.n, getattr(args, "m", None), getattr(args, "d", 0.1))


def _resolve_seed(seed):
    return secrets.randbits(63) if seed is None else seed


def _options(args, seed, path=None):
    return DCOptions(
        base_size=args.base_size,
        switch_threshold=args.switch_threshold,
        hss_tol=args.hss_tol,
        leaf_size=args.leaf_size,
        r0=args.r0,
        p=args.p,
        rank_increment=args.rank_increment,
        seed=seed,
        path=path or args.path,
        tol_factor=args.tol_factor,
        matmat_block=args.matmat_block,
    )


def _emit(text, out):
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_gen(args):
    A, _ = _generate(args.kind, args.n, args.m, args.d)
    if isinstance(A, np.ndarray):
        matgen.write_dense(A, args.out)
    else:
        matgen.write_tridiag(A, args.out)
    print(f"n={args.n} sha256={matgen.file_checksum(args.out)} out={args.out}")
    return EXIT_OK


def cmd_solve(args):
    T, desc = _load_input(args, TRIDIAGONAL_KINDS)
    if isinstance(T, np.ndarray):
        raise UsageError("solve needs a tridiagonal matrix file, got a dense one")
    seed = _resolve_seed(args.seed)
    opts = _options(args, seed)
    t0 = time.perf_counter()
    E, stats = solve(T, opts)
    wall = time.perf_counter() - t0
    metrics = verify(T, E)
    metrics["max_orthogonality"] = args.max_orthogonality
    metrics["max_residual"] = args.max_residual
    metrics["passed"] = bool(
        metrics["orthogonality"] <= args.max_orthogonality
        and metrics["residual"] <= args.max_residual
        and metrics["ascending"]
    )
    report = build_report(desc, stats, metrics, wall, RNG_NAME)
    _emit(report.to_json(), args.report)
    if args.eigenvalues is not None:
        Path(args.eigenvalues).write_text("".join(f"{v!r}\n" for v in E.values.tolist()))
    if not metrics["passed"]:
        print(
            f"verification failed: orthogonality={metrics['orthogonality']:.3e} "
            f"(max {args.max_orthogonality:.1e}) residual={metrics['residual']:.3e} "
            f"(max {args.max_residual:.1e}) ascending={metrics['ascending']}",
            file=sys.stderr,
        )
        return EXIT_VERIFY
    return EXIT_OK


def bench_rows(T, n, opts):
    """Top-merge measurements for both update paths, children solved once."""
    k = (T.n + 1) // 2
    T1, T2, b = split(T, k)
    t0 = time.perf_counter()
    E1, s1 = solve(T1, opts)
    E2, s2 = solve(T2, opts)
    child_time = time.perf_counter() - t0
    child_flops = s1.total_flops + s2.total_flops
    rows = []
    for path in ("force-dense", "force-hss"):
        o = DCOptions(**{**asdict(opts), "path": path})
        t0 = time.perf_counter()
        E, ms = merge(E1, E2, b, o)
        wall = child_time + time.perf_counter() - t0
        m = verify(T, E)
        rows.append({
            "n": n,
            "path": path,
            "flops_update_top_merge": ms.flops_update,
            "total_flops": child_flops + ms.flops_update + ms.flops_secular,
            "hss_rank": ms.hss_rank,
            "deflation_fraction": ms.deflation_fraction,
            "wall_time": wall,
            "orthogonality": m["orthogonality"],
            "residual": m["residual"],
        })
    return rows


def _top_flops(kind, n, opts, m):
    T, _ = _generate(kind, n, m)
    rows = bench_rows(T, n, opts)
    return rows[0]["flops_update_top_merge"], rows[1]["flops_update_top_merge"]


def crossover(kind, lo, hi, opts, m=None):
    """Smallest n in [lo, hi] where HSS top-merge flops < dense, by bisection.

    Assumes the comparison flips once over the range; returns None if HSS is
    not cheaper at ``hi``.
    """
    dense, hss = _top_flops(kind, hi, opts, m)
    if not hss < dense:
        return None
    dense, hss = _top_flops(kind, lo, opts, m)
    if hss < dense:
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        dense, hss = _top_flops(kind, mid, opts, m)
        if hss < dense:
            hi = mid
        else:
            lo = mid
    return hi


def _format_rows(rows, fmt):
    if fmt == "json":
        return json.dumps({"format_version": FORMAT_VERSION, "rows": plain(rows)}, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r[k] is None else r[k]) for k in BENCH_COLUMNS})
    return buf.getvalue()


def cmd_bench(args):
    if args.kind not in TRIDIAGONAL_KINDS:
        raise UsageError(f"--kind must be one of {', '.join(TRIDIAGONAL_KINDS)}")
    seed = _resolve_seed(args.seed)
    opts = _options(args, seed)
    if args.crossover:
        lo, hi = args.lo, args.hi
        if not 2 * opts.base_size < lo < hi:
            raise UsageError("need 2 * base_size < --lo < --hi")
        n = crossover(args.kind, lo, hi, opts, args.m)
        print(f"crossover n={n if n is not None else 'none'} kind={args.kind} seed={seed}")
        return EXIT_OK
    if not args.n:
        raise UsageError("--n needs at least one value")
    rows = []
    for n in args.n:
        if n <= opts.base_size:
            raise UsageError(f"n={n} is not larger than base_size={opts.base_size}")
        T, _ = _generate(args.kind, n, args.m)
        rows.extend(bench_rows(T, n, opts))
    _emit(_format_rows(rows, args.format), args.out)
    return EXIT_OK


def cmd_hss_test(args):
    A, desc = _load_input(args, DENSE_KINDS)
    if not isinstance(A, np.ndarray) or A.shape[0] != A.shape[1]:
        raise UsageError("hss-test needs a square dense matrix")
    n = A.shape[0]
    seed = _resolve_seed(args.seed)
    counter = FlopCounter()
    t0 = time.perf_counter()
    tree = build_cluster_tree(n, min(args.leaf_size, n))
    H = compress_randomized(DenseSource(A, counter), tree, r0=args.r0, p=args.p, tol=args.tol,
                            rank_increment=args.rank_increment, seed=seed, counter=counter)
    wall = time.perf_counter() - t0
    diag = hss_diagnostics(H)
    norm = np.linalg.norm(A)
    x = np.random.default_rng(seed).standard_normal((n, 1))
    matvec_error = float(np.linalg.norm(hss_matmat(H, x, counter=counter) - A @ x) / np.linalg.norm(A @ x))
    error = None
    if n <= args.max_reconstruct:
        error = float(np.linalg.norm(hss_to_dense(H) - A) / norm)
    report = {
        "format_version": FORMAT_VERSION,
        "input": desc,
        "n": n,
        "tol": args.tol,
        "leaf_size": args.leaf_size,
        "r0": args.r0,
        "p": args.p,
        "rank_increment": args.rank_increment,
        "seed": seed,
        "rng": RNG_NAME,
        "hss_rank": diag["hss_rank"],
        "level_ranks": diag["level_ranks"],
        "relative_error": error,
        "matvec_relative_error": matvec_error,
        "samples": diag["samples"],
        "fallback_nodes": diag["fallback_nodes"],
        "memory": diag["memory"],
        "flops": plain(dict(counter.counts)),
        "wall_time": wall,
    }
    _emit(json.dumps(plain(report), sort_keys=True, indent=2) + "\n", args.report)
    return EXIT_OK


def _add_solver_options(p):
    g = p.add_argument_group("solver options")
    d = DCOptions()
    g.add_argument("--path", choices=PATHS, default=d.path)
    g.add_argument("--base-size", type=_positive_int, default=d.base_size)
    g.add_argument("--switch-threshold", type=_positive_int, default=d.switch_threshold)
    g.add_argument("--hss-tol", type=_positive_float, default=d.hss_tol)
    g.add_argument("--leaf-size", type=_positive_int, default=d.leaf_size)
    g.add_argument("--r0", type=_positive_int, default=d.r0)
    g.add_argument("--p", type=_nonneg_int, default=d.p)
    g.add_argument("--rank-increment", type=_positive_int, default=d.rank_increment)
    g.add_argument("--tol-factor", type=_positive_float, default=d.tol_factor)
    g.add_argument("--matmat-block", type=_positive_int, default=d.matmat_block)


def _add_common(p):
    p.add_argument("--seed", type=_nonneg_int, default=None,
                   help="RNG seed; drawn from system entropy and echoed when omitted")
    p.add_argument("--threads", type=_nonneg_int, default=None,
                   help=f"cap on library worker threads, 0 = auto (default: ${THREADS_ENV} or 0)")


def build_parser():
    parser = _Parser(prog="hybriddc", description="Tridiagonal divide-and-conquer eigensolver with HSS-accelerated merges.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a test matrix file")
    g.add_argument("--kind", required=True, choices=TRIDIAGONAL_KINDS + DENSE_KINDS)
    g.add_argument("--n", required=True, type=_positive_int)
    g.add_argument("--m", type=_nonneg_int, default=None, help="order for sht")
    g.add_argument("--d", type=_positive_float, default=0.1, help="grid spacing for kinetic")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve and verify, emit a JSON report")
    s.add_argument("--in", dest="input", default=None)
    s.add_argument("--kind", default=None)
    s.add_argument("--n", type=_positive_int, default=None)
    s.add_argument("--m", type=_nonneg_int, default=None)
    s.add_argument("--report", default=None, help="report file (default stdout)")
    s.add_argument("--eigenvalues", default=None, help="write eigenvalues, one per line")
    s.add_argument("--max-orthogonality", type=_positive_float, default=5e-13)
    s.add_argument("--max-residual", type=_positive_float, default=1e-12)
    _add_solver_options(s)
    _add_common(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="dense vs HSS top-merge flop table")
    b.add_argument("--kind", default="clement")
    b.add_argument("--n", type=_positive_int, nargs="*", default=None)
    b.add_argument("--m", type=_nonneg_int, default=None)
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.add_argument("--out", default=None)
    b.add_argument("--crossover", action="store_true", help="bisect for the flop crossover n")
    b.add_argument("--lo", type=_positive_int, default=128)
    b.add_argument("--hi", type=_positive_int, default=4096)
    _add_solver_options(b)
    _add_common(b)
    b.set_defaults(func=cmd_bench)

    h = sub.add_parser("hss-test", help="compress a dense Toeplitz matrix and report rank and error")
    h.add_argument("--in", dest="input", default=None)
    h.add_argument("--kind", default=None)
    h.add_argument("--n", type=_positive_int, default=None)
    h.add_argument("--d", type=_positive_float, default=0.1)
    h.add_argument("--tol", type=_positive_float, default=1e-14)
    h.add_argument("--leaf-size", type=_positive_int, default=128)
    h.add_argument("--r0", type=_positive_int, default=32)
    h.add_argument("--p", type=_nonneg_int, default=10)
    h.add_argument("--rank-increment", type=_positive_int, default=32)
    h.add_argument("--max-reconstruct", type=_nonneg_int, default=4000)
    h.add_argument("--report", default=None)
    _add_common(h)
    h.set_defaults(func=cmd_hss_test)
    return parser


def _thread_cap(args):
    threads = getattr(args, "threads", None)
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise UsageError(f"${THREADS_ENV} must be an integer, got {env!r}") from None
            if threads < 0:
                raise UsageError(f"${THREADS_ENV} must be nonnegative")
    return threads or None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cap = _thread_cap(args)
        with threadpool_limits(limits=cap):
            return args.func(args)
    except UsageError as exc:
        print(f"hybriddc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"hybriddc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
