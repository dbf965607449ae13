"""Command-line front end: ``gen``, ``decompose``, ``eval`` and ``bench``.

Exit codes: 0 on success, 2 for unusable input (bad files, shapes or
arguments), 3 when the solver hits a degenerate rank-one component.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from typing import Optional, Sequence

import numpy as np

from . import io as fileio
from .alm import theta
from .exceptions import DegenerateComponentError
from .generators import KINDS, generate
from .kruskal import KruskalTensor, is_orthogonal, pairwise_inner, relative_error
from .pipeline import decompose

METHODS = ("cp-als", "od-alm")
SYNTHETIC_DIMS = (20, 16, 10, 32)
BENCH_HEADER = ("tensor", "kind", "method", "repeats", "mean_seconds", "mean_rerr", "mean_iters")


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(t) for t in text.replace("x", ",").replace(" ", ",").split(",") if t)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}") from exc
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError("dims must be positive integers")
    return dims


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("expected an integer >= 1")
    return v


def _solver_kwargs(args, method: str) -> dict:
    kw = {"seed": args.seed}
    if method == "od-alm":
        kw.update(eps_inner=args.eps_inner, eps_outer=args.eps_outer, max_outer=args.max_outer,
                  mu0=args.mu0, mu_growth=args.mu_growth)
    return kw


def cmd_gen(args) -> int:
    a = generate(args.kind, args.dims, rank=args.rank, seed=args.seed, noise_level=args.noise_level)
    if args.out:
        fileio.write_tensor(args.out, a, args.format)
    elif args.format == "binary":
        sys.stdout.buffer.write(fileio.tensor_to_bytes(a))
    else:
        sys.stdout.write(fileio.dumps_tensor(a))
    return 0


def cmd_decompose(args) -> int:
    a = fileio.read_tensor(args.input)
    res = decompose(a, args.method, args.rank, **_solver_kwargs(args, args.method))
    if args.out:
        fileio.write_kruskal(args.out, res.model)
    if args.trace:
        fileio.write_trace(args.trace, res.trace)
    print(f"method: {res.method}")
    print(f"rerr: {res.rerr:.6g}")
    print(f"seconds: {res.seconds:.3f}")
    print(f"iterations: {res.iterations}")
    print(f"stop_reason: {res.trace.stop_reason}")
    return 0


def _normalized(k: KruskalTensor) -> list[np.ndarray]:
    out = []
    for f in k.factors:
        norms = np.linalg.norm(f, axis=0)
        out.append(f / np.where(norms > 0, norms, 1.0))
    return out


def cmd_eval(args) -> int:
    a = fileio.read_tensor(args.tensor)
    k = fileio.read_kruskal(args.kruskal)
    print(f"rerr: {relative_error(a, k):.6g}")
    try:
        print(f"theta: {theta(k):.6g}")
    except DegenerateComponentError:
        print("theta: nan")
    g = pairwise_inner(k)
    off = np.abs(g - np.diag(np.diag(g)))
    print(f"max_offdiag: {off.max():.6g}")
    print(f"orthogonal: {is_orthogonal(k, 1e-10)[0]}")
    with np.printoptions(precision=4, suppress=True, linewidth=120):
        for n, u in enumerate(_normalized(k)):
            print(f"gram mode {n}:")
            print(u.T @ u)
    return 0


def bench_rows(kinds: Sequence[str], methods: Sequence[str], repeats: int, seed: int,
               dims=SYNTHETIC_DIMS, rank: int = 5, noise_level: float = 0.1,
               solver_kwargs: Optional[dict] = None):
    """Mean seconds, RErr and iterations per (tensor, method), in input order."""
    rows = []
    for t, kind in enumerate(kinds, start=1):
        for method in methods:
            secs, rerrs, iters = [], [], []
            for i in range(repeats):
                a = generate(kind, dims, rank=rank, seed=seed + i, noise_level=noise_level)
                kw = {"seed": seed + i}
                if method == "od-alm":
                    kw.update(solver_kwargs or {})
                res = decompose(a, method, rank, **kw)
                secs.append(res.seconds)
                rerrs.append(res.rerr)
                iters.append(res.iterations)
            rows.append((f"A{t}", kind, method, repeats, float(np.mean(secs)),
                         float(np.mean(rerrs)), float(np.mean(iters))))
    return rows


def cmd_bench(args) -> int:
    methods = METHODS if args.method == "all" else (args.method,)
    kw = {"eps_inner": args.eps_inner, "eps_outer": args.eps_outer, "max_outer": args.max_outer,
          "mu0": args.mu0, "mu_growth": args.mu_growth}
    rows = bench_rows(KINDS, methods, args.repeats, args.seed, args.dims, args.rank,
                      args.noise_level, kw)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for name, kind, method, reps, sec, rerr, it in rows:
        w.writerow([name, kind, method, reps, "" if args.omit_time else "%.4f" % sec,
                    "%.6f" % rerr, "%.2f" % it])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-inner", type=float, default=None,
                   help="inner gradient tolerance (default 1e-4, 1e-3 above 1e6 entries)")
    p.add_argument("--eps-outer", type=float, default=None,
                   help="outer angle tolerance (default 1e-4, 1e-3 above 1e6 entries)")
    p.add_argument("--max-outer", type=_positive_int, default=25)
    p.add_argument("--mu0", type=float, default=1.0)
    p.add_argument("--mu-growth", type=float, default=10.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orthtensor",
                                     description="Orthogonal low-rank tensor approximation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic test tensor")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--dims", type=_dims, default=SYNTHETIC_DIMS)
    p.add_argument("--rank", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-level", type=float, default=0.1)
    p.add_argument("--format", choices=("text", "binary"), default="text")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decompose", help="fit a CP or orthogonal model to a tensor file")
    p.add_argument("input")
    p.add_argument("--method", choices=METHODS, default="od-alm")
    p.add_argument("--rank", type=_positive_int, required=True)
    _add_solver_flags(p)
    p.add_argument("--out", help="write the model as a Kruskal file")
    p.add_argument("--trace", help="write the per-iteration trace as CSV")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("eval", help="report error and orthogonality of a model")
    p.add_argument("tensor")
    p.add_argument("kruskal")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run both methods on the four synthetic tensors")
    p.add_argument("--method", choices=METHODS + ("all",), default="all")
    p.add_argument("--repeats", type=_positive_int, default=10)
    p.add_argument("--dims", type=_dims, default=SYNTHETIC_DIMS)
    p.add_argument("--rank", type=_positive_int, default=5)
    p.add_argument("--noise-level", type=float, default=0.1)
    p.add_argument("--omit-time", action="store_true",
                   help="leave the timing column empty so output is byte-reproducible")
    p.add_argument("--out", help="output CSV (default: stdout)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateComponentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
