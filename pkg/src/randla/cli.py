"""Command line front end: ``randla <subcommand> [flags]``.

A human-readable table goes to stdout. ``--out PATH`` writes the machine
records (CSV or JSON, chosen by ``--format``) to a file; without ``--out`` an
explicit ``--format`` prints the records to stdout instead of the table.
Exit status: 0 success, 1 a validation check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import List, Optional

import numpy as np

from . import bench
from .errors import RandlaError
from .generators import CLI_NAMES, paper_profile, profile_matrix
from .io import read_matrix_market
from .nrank import nrank_search
from .rng import RngStream
from .tt import (
    TtTrain,
    read_tensor_binary,
    read_tensor_csv,
    tt_error,
    tt_randomized,
    tt_reconstruct,
    tt_svd,
)

CHECKS = ("theorem31", "theorem41", "theorem32", "theorem33", "appendixA", "all")


def _pos_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _int_list(text: str) -> List[int]:
    vals = [_pos_int(t) for t in text.split(",") if t.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return vals


def _float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p, trials):
    p.add_argument("--trials", type=_pos_int, default=trials)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write machine-readable records to this file")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--threads", type=_pos_int, default=None,
                   help="worker threads (default: $RANDLA_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="randla", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genp-bench", help="randomized GENP on systems with an ill conditioned leading block")
    p.add_argument("--sizes", type=_int_list, default=[64, 256])
    p.add_argument("--multiplier", choices=sorted(CLI_NAMES), default="circulant-sign")
    p.add_argument("--refine", type=int, choices=(0, 1, 2), default=1,
                   help="report refinement levels 0..REFINE")
    p.add_argument("--side", choices=("left", "right", "both"), default="left")
    p.add_argument("--raw", action="store_true",
                   help="add a row for plain GENP without a multiplier")
    _common(p, 100)

    p = sub.add_parser("lowrank-bench", help="leading singular space and low-rank residuals")
    p.add_argument("--n", type=_int_list, default=[64])
    p.add_argument("--q", type=_int_list, default=[8])
    p.add_argument("--multiplier", choices=("gaussian", "toeplitz"), default="gaussian")
    p.add_argument("--law", choices=("uniform", "normal"), default="uniform",
                   help="entry distribution of the multiplier (default uniform on [-1, 1))")
    _common(p, 100)

    p = sub.add_parser("nrank", help="numerical rank search without pivoting")
    p.add_argument("--input", help="Matrix Market file; otherwise seeded profile matrices")
    p.add_argument("--n", type=_pos_int, default=64)
    p.add_argument("--q", type=_pos_int, default=8, help="rank of the synthetic profile matrices")
    p.add_argument("--rho-minus", type=int, default=0)
    p.add_argument("--rho-plus", type=int, default=None)
    p.add_argument("--kappa", type=float, default=1e6)
    p.add_argument("--policy", choices=("binary", "linear_down"), default="binary")
    p.add_argument("--method", choices=("lanczos", "power"), default="lanczos")
    _common(p, 100)

    p = sub.add_parser("tt-compress", help="TT decomposition of a dense tensor")
    p.add_argument("--input", help="tensor file (.csv or little-endian binary)")
    p.add_argument("--dims", type=_int_list, default=[4, 4, 4, 4],
                   help="dims of the synthetic tensor when --input is absent")
    p.add_argument("--true-ranks", type=_int_list, default=[2, 3, 2])
    p.add_argument("--ranks", type=_int_list, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--method", choices=("svd", "randomized"), default="svd")
    p.add_argument("--oversample", type=int, default=0)
    _common(p, 1)

    p = sub.add_parser("validate", help="Monte Carlo checks of the probabilistic bounds")
    p.add_argument("--check", choices=CHECKS, default="all")
    p.add_argument("--n", type=_pos_int, default=16)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--x-grid", type=_float_list, default=[2.0, 5.0, 10.0])
    p.add_argument("--rho-plus", type=_pos_int, default=8,
                   help="row count r of G in the product checks")
    p.add_argument("--profile-rank", type=int, default=None,
                   help="use a profile matrix of this rank as M (default: identity)")
    p.add_argument("--k", type=_int_list, default=[2, 3, 4])
    p.add_argument("--cardinality", type=_int_list, default=[16, 64])
    _common(p, 2000)
    return ap


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}" if v != 0 and (abs(v) < 1e-3 or abs(v) >= 1e5) else f"{v:.6g}"
    return str(v)


def human_table(records: List[dict]) -> str:
    if not records:
        return ""
    keys = list(records[0])
    for r in records[1:]:
        keys += [k for k in r if k not in keys]
    cells = [[_fmt(r.get(k, "")) for k in keys] for r in records]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    lines = ["  ".join(k.rjust(w) for k, w in zip(keys, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def render(records: List[dict], fmt: str) -> str:
    if fmt == "json":
        clean = [{k: _json_value(v) for k, v in r.items()} for r in records]
        return json.dumps(clean, indent=2) + "\n"
    keys = list(records[0]) if records else []
    for r in records[1:]:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _cmd_genp(a):
    return bench.table1_genp(a.sizes, a.trials, a.multiplier, a.seed, a.refine, a.side,
                             a.threads, a.raw), True


def _cmd_lowrank(a):
    kind = {"gaussian": "gaussian", "toeplitz": "toeplitz_gaussian"}[a.multiplier]
    return bench.table23_lowrank(a.n, a.q, a.trials, kind, a.seed, a.law, a.threads), True


def _cmd_nrank(a):
    if a.input:
        A = read_matrix_market(a.input)
        rho, _ = nrank_search(A, a.rho_minus, a.rho_plus, a.kappa, a.policy, a.method,
                              rng=RngStream(a.seed))
        return [{"check": "nrank", "input": a.input, "rows": A.shape[0], "cols": A.shape[1],
                 "policy": a.policy, "method": a.method, "rank": rho}], True

    def trial(i):
        g = RngStream(a.seed, i).generator()
        A = profile_matrix(a.n, paper_profile(a.n, a.q), g)
        return nrank_search(A, a.rho_minus, a.rho_plus, a.kappa, a.policy, a.method, rng=g)[0]

    found = bench.run_trials(trial, a.trials, a.threads)
    st = bench.TrialStats.from_samples(found)
    hits = sum(r == a.q for r in found)
    return [{"check": "nrank", "n": a.n, "q": a.q, "policy": a.policy, "method": a.method,
             "hits": hits, **st.as_dict()}], True


def _cmd_tt(a):
    if a.input:
        T = read_tensor_csv(a.input) if a.input.endswith(".csv") else read_tensor_binary(a.input)
    else:
        g = RngStream(a.seed).generator()
        rs = [1, *a.true_ranks, 1]
        if len(rs) != len(a.dims) + 1:
            raise ValueError("--true-ranks needs len(--dims) - 1 entries")
        cores = tuple(g.standard_normal((rs[k], n, rs[k + 1])) for k, n in enumerate(a.dims))
        T = tt_reconstruct(TtTrain(cores))
    if a.method == "svd":
        if (a.ranks is None) == (a.tol is None):
            a.ranks = a.ranks or list(a.true_ranks)
            a.tol = None
        train = tt_svd(T, ranks=a.ranks, tol=a.tol)
    else:
        ranks = a.ranks or list(a.true_ranks)
        train = tt_randomized(T, ranks, a.oversample, RngStream(a.seed, 1))
    err = tt_error(T, train)
    rec = {"check": "tt", "method": a.method, "dims": "x".join(map(str, T.dims)),
           "ranks": "-".join(map(str, train.ranks)), "error": err,
           "rel_error": err / T.norm() if T.norm() else 0.0}
    if train.tails is not None:
        rec["tail_bound"] = float(np.sqrt(sum(t * t for t in train.tails)))
    return [rec], True


def _cmd_validate(a):
    reports = []
    want = set(CHECKS[:-1]) if a.check == "all" else {a.check}
    if "theorem31" in want:
        reports.append(bench.tail_check_theorem31(a.n, a.n, a.sigma, a.x_grid, a.trials,
                                                  a.seed, threads=a.threads))
    if "theorem41" in want:
        if a.profile_rank is None:
            M = np.eye(a.n)
        else:
            M = profile_matrix(a.n, paper_profile(a.n, a.profile_rank), RngStream(a.seed, 2**32))
        reports += bench.tail_check_theorem41(M, a.rho_plus, a.x_grid, a.trials, a.seed,
                                              a.sigma, a.threads)
    if want & {"theorem32", "theorem33"}:
        nrep, crep = bench.norm_cond_checks(a.n, a.sigma, a.trials, a.seed, threads=a.threads)
        reports += [r for r, key in ((nrep, "theorem32"), (crep, "theorem33")) if key in want]
    if "appendixA" in want:
        reports += bench.appendixA_check(a.k, a.cardinality, a.trials, a.seed,
                                         threads=a.threads)
    records = [rec for r in reports for rec in r.records()]
    return records, all(r.passed for r in reports)


COMMANDS = {
    "genp-bench": _cmd_genp,
    "lowrank-bench": _cmd_lowrank,
    "nrank": _cmd_nrank,
    "tt-compress": _cmd_tt,
    "validate": _cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        records, ok = COMMANDS[args.command](args)
    except (RandlaError, ValueError, OSError) as exc:
        print(f"randla {args.command}: error: {exc}", file=sys.stderr)
        return 2
    fmt = args.format or "csv"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(render(records, fmt))
        sys.stdout.write(human_table(records))
    elif args.format:
        sys.stdout.write(render(records, fmt))
    else:
        sys.stdout.write(human_table(records))
    if not ok:
        print(f"randla {args.command}: check failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
