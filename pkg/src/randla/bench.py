"""Monte Carlo validation of the tail bounds and reproduction of the GENP and
low-rank experiment tables.

Trial ``i`` of every experiment draws from ``RngStream(seed, i)`` (through a
sub-stream keyed by the experiment configuration), so results are independent
of thread count and execution order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .dense import numerical_rank, qr_positive
from .errors import ConstructionFailed
from .generators import (
    MultiplierKind,
    draw_multiplier,
    gaussian_matrix,
    illblock_system,
    integer_matrix,
    paper_profile,
    profile_matrix,
)
from .genp import randomized_genp
from .lowrank import _times
from .rng import RngStream

__all__ = [
    "TrialStats",
    "TailCheckReport",
    "run_trials",
    "resolve_threads",
    "table1_genp",
    "table23_lowrank",
    "tail_check_theorem31",
    "tail_check_theorem41",
    "norm_cond_checks",
    "appendixA_check",
    "exact_det",
    "strongly_nonsingular",
]

THREE_SIGMA = 3.0
COND_RHS_FLOOR = 0.05


@dataclass(frozen=True)
class TrialStats:
    """min, max, mean and population std of a batch, with the raw samples kept."""

    n_trials: int
    min: float
    max: float
    mean: float
    std: float
    samples: Tuple[float, ...] = field(repr=False, default=())

    @classmethod
    def from_samples(cls, samples) -> "TrialStats":
        x = np.asarray(samples, dtype=np.float64)
        if x.size == 0:
            raise ValueError("no samples")
        # a non-finite sample (a garbage solve) makes the spread infinite, not NaN
        std = float(x.std()) if np.all(np.isfinite(x)) else math.inf
        return cls(int(x.size), float(x.min()), float(x.max()), float(x.mean()),
                   std, tuple(float(v) for v in x))

    def as_dict(self) -> dict:
        return {"n_trials": self.n_trials, "min": self.min, "max": self.max,
                "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class TailCheckReport:
    """Empirical frequencies against a probability bound on a grid.

    ``kind='upper'`` claims ``P <= bound`` and passes when
    ``freq <= bound + 3 sqrt(freq (1 - freq) / trials)`` at every point;
    ``kind='lower'`` claims ``P >= bound`` with the mirrored rule;
    ``kind='exact'`` requires ``freq == bound``.
    """

    bound_name: str
    grid: Tuple[float, ...]
    empirical_freq: Tuple[float, ...]
    theoretical_bound: Tuple[float, ...]
    trials: int
    kind: str = "upper"
    note: str = ""

    def __post_init__(self):
        if not len(self.grid) == len(self.empirical_freq) == len(self.theoretical_bound):
            raise ValueError("grid, frequencies and bounds must have equal length")
        if any(not 0.0 <= f <= 1.0 for f in self.empirical_freq):
            raise ValueError("frequencies must lie in [0, 1]")
        if self.kind not in ("upper", "lower", "exact"):
            raise ValueError("kind must be upper, lower or exact")

    @property
    def margins(self) -> Tuple[float, ...]:
        return tuple(THREE_SIGMA * math.sqrt(f * (1.0 - f) / self.trials)
                     for f in self.empirical_freq)

    @property
    def point_pass(self) -> Tuple[bool, ...]:
        out = []
        for f, b, m in zip(self.empirical_freq, self.theoretical_bound, self.margins):
            if self.kind == "upper":
                out.append(f <= b + m)
            elif self.kind == "lower":
                out.append(f >= b - m)
            else:
                out.append(f == b)
        return tuple(out)

    @property
    def passed(self) -> bool:
        return all(self.point_pass)

    def records(self) -> List[dict]:
        return [
            {"check": self.bound_name, "kind": self.kind, "grid": g, "trials": self.trials,
             "empirical": f, "bound": b, "margin": m, "pass": p}
            for g, f, b, m, p in zip(self.grid, self.empirical_freq, self.theoretical_bound,
                                     self.margins, self.point_pass)
        ]


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit value, else ``RANDLA_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("RANDLA_THREADS", "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("threads must be positive")
    return threads


def run_trials(fn: Callable[[int], object], trials: int, threads: Optional[int] = None) -> list:
    """``[fn(0), ..., fn(trials - 1)]``, optionally on a thread pool; order is by index."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    threads = resolve_threads(threads)
    if threads == 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def _gen(seed, trial, key):
    return RngStream(seed, trial).substream(key)


# --- experiment tables ------------------------------------------------------

def table1_genp(sizes: Sequence[int], trials: int = 100, kind="circulant-sign", seed: int = 0,
                refine: int = 1, side="left", threads=None, raw: bool = True) -> List[dict]:
    """Randomized GENP on well conditioned systems with an ill conditioned
    leading block. Returns one row per ``(n, refine level)`` plus, with
    ``raw=True``, the unpreconditioned GENP contrast row.
    """
    if isinstance(kind, str):
        kind = MultiplierKind.parse(kind)
    rows = []
    for n in sizes:
        if n % 2:
            raise ValueError(f"sizes must be even, got {n}")

        def trial(i, n=n):
            g = _gen(seed, i, n)
            try:
                A, b, _ = illblock_system(n, g)
            except ConstructionFailed as exc:
                raise ConstructionFailed(f"trial {i}, n={n}: {exc}") from exc
            _, rep = randomized_genp(A, b, kind, side=side, refine=refine, rng=g)
            return rep

        reports = run_trials(trial, trials, threads)
        for level in range(refine + 1):
            st = TrialStats.from_samples([r.residuals[level] for r in reports])
            rows.append({"check": "table1", "n": n, "multiplier": kind.cli_name,
                         "refine": level, **st.as_dict()})
        if not raw:
            continue
        st = TrialStats.from_samples([r.raw_residual for r in reports])
        rows.append({"check": "table1_raw_genp", "n": n, "multiplier": "none",
                     "refine": 0, **st.as_dict(), "median": float(np.median(st.samples))})
    return rows


def lowrank_trial(n: int, q: int, kind: MultiplierKind, gen) -> Tuple[float, float]:
    """One run of the singular-space experiment: ``(rn1, rn2)``."""
    A, _, T = profile_matrix(n, paper_profile(n, q), gen, return_factors=True)
    G = draw_multiplier(kind, n, q, gen)
    B = _times(A.T, G)
    Tq = T[:, :q]
    Y = np.linalg.lstsq(B, Tq, rcond=None)[0]
    rn1 = float(np.linalg.norm(B @ Y - Tq, 2))
    Q = qr_positive(B).Q
    rn2 = float(np.linalg.norm(A - (A @ Q) @ Q.T, 2))
    return rn1, rn2


def table23_lowrank(ns: Sequence[int], qs: Sequence[int], trials: int = 100, kind="gaussian",
                    seed: int = 0, law: str = "uniform", threads=None) -> List[dict]:
    """Leading singular space and rank-q approximation from ``B = A^T G``.

    For every pair ``(n, q)``: rn1 is the least-squares residual of fitting the
    leading q right singular vectors from the columns of B, and rn2 is
    ``||A - A Q Q^T||`` with ``Q`` the orthonormal factor of B.
    """
    if isinstance(kind, str):
        kind = MultiplierKind.parse(kind, law=law)
    if kind.tag not in ("gaussian", "toeplitz_gaussian"):
        raise ValueError("table multipliers are gaussian or toeplitz")
    rows = []
    for n in ns:
        for q in qs:
            if not 1 <= q < n:
                raise ValueError(f"need 1 <= q < n, got q={q}, n={n}")

            def trial(i, n=n, q=q):
                return lowrank_trial(n, q, kind, _gen(seed, i, n * 4096 + q))

            res = run_trials(trial, trials, threads)
            for metric, idx in (("rn1", 0), ("rn2", 1)):
                st = TrialStats.from_samples([r[idx] for r in res])
                rows.append({"check": "table23", "n": n, "q": q, "multiplier": kind.cli_name,
                             "law": kind.law, "metric": metric, **st.as_dict()})
    return rows


# --- tail bounds ------------------------------------------------------------

def _freqs(values, thresholds):
    v = np.asarray(values)
    return tuple(float(np.mean(v >= t)) for t in thresholds)


def _inv_smallest(P, k):
    # ||P^+|| restricted to rank k: 1 / sigma_k(P)
    s = np.linalg.svd(P, compute_uv=False)
    return math.inf if s[k - 1] == 0.0 else 1.0 / s[k - 1]


def tail_check_theorem31(m: int, n: int, sigma: float = 1.0, x_grid=(2, 5, 10),
                         trials: int = 2000, seed: int = 0, mu: float = 0.0, B=None,
                         threads=None) -> TailCheckReport:
    """``P{||(A - B)^+|| >= 2.35 x sqrt(l) / sigma} <= 1/x`` for Gaussian A."""
    if any(x <= 1 for x in x_grid):
        raise ValueError("x_grid values must exceed 1")
    if m < 1 or n < 1 or sigma <= 0:
        raise ValueError("need positive m, n and sigma")
    l = min(m, n)
    Bm = np.zeros((m, n)) if B is None else np.asarray(B, dtype=float)
    if Bm.shape != (m, n):
        raise ValueError("B must be m x n")

    def trial(i):
        A = gaussian_matrix(m, n, mu, sigma, _gen(seed, i, 31))
        return _inv_smallest(A - Bm, l)

    vals = run_trials(trial, trials, threads)
    thr = [2.35 * x * math.sqrt(l) / sigma for x in x_grid]
    name = "theorem31" if B is None else "theorem31_shifted"
    return TailCheckReport(name, tuple(float(x) for x in x_grid), _freqs(vals, thr),
                           tuple(1.0 / x for x in x_grid), trials)


def _rank_and_pinv_norm(M):
    s = np.linalg.svd(M, compute_uv=False)
    r = numerical_rank(M)
    return r, (1.0 / s[r - 1] if r else math.inf)


def tail_check_theorem41(M, r: int, x_grid=(2, 5, 10), trials: int = 2000, seed: int = 0,
                         sigma: float = 1.0, threads=None) -> List[TailCheckReport]:
    """Tail checks for Gaussian products ``G M`` and ``M H``.

    Returns reports for ``P = G M`` and ``P = M H`` (G is r x m, H is n x r),
    one report per leading block order j of ``G M`` with ``rank(M_j) = j``,
    and an exact full-rank report for ``G M`` when ``rank(M) >= r``.
    ``rank`` is the numerical rank at the default tolerance and ``||M^+||`` is
    the inverse of the smallest singular value kept by it.
    """
    M = np.asarray(M, dtype=float)
    if r < 1 or sigma <= 0:
        raise ValueError("r and sigma must be positive")
    if any(x <= 1 for x in x_grid):
        raise ValueError("x_grid values must exceed 1")
    m, n = M.shape
    rank_M, M_pinv = _rank_and_pinv_norm(M)
    r_hat = min(r, rank_M)
    jmax = min(r, rank_M, n)
    blocks = []
    for j in range(1, jmax + 1):
        rj, pj = _rank_and_pinv_norm(M[:, :j])
        if rj == j:
            blocks.append((j, pj))

    def trial(i):
        g = _gen(seed, i, 41)
        G = gaussian_matrix(r, m, 0.0, sigma, g)
        H = gaussian_matrix(n, r, 0.0, sigma, g)
        GM = G @ M
        out = [_inv_smallest(GM, r_hat), _inv_smallest(M @ H, r_hat)]
        out += [_inv_smallest(GM[:j, :j], j) for j, _ in blocks]
        out.append(numerical_rank(GM, tol=1e-12) == min(r, n))
        return out

    res = run_trials(trial, trials, threads)
    grid = tuple(float(x) for x in x_grid)
    bound = tuple(1.0 / x for x in x_grid)
    thr = [2.35 * x * math.sqrt(r_hat) * M_pinv / sigma for x in x_grid]
    reports = [
        TailCheckReport("theorem41_GM", grid, _freqs([v[0] for v in res], thr), bound, trials),
        TailCheckReport("theorem41_MH", grid, _freqs([v[1] for v in res], thr), bound, trials),
    ]
    for k, (j, pj) in enumerate(blocks):
        thr_j = [2.35 * x * math.sqrt(j) * pj / sigma for x in x_grid]
        reports.append(TailCheckReport(f"corollary42_block{j}", grid,
                                       _freqs([v[2 + k] for v in res], thr_j), bound, trials))
    if rank_M >= r:
        freq = float(np.mean([v[-1] for v in res]))
        reports.append(TailCheckReport("corollary42_full_rank", (float(r),), (freq,), (1.0,),
                                       trials, kind="exact"))
    return reports


def norm_rhs(z, n, sigma):
    return 1.0 - math.exp(-((z - 2.0 * sigma * math.sqrt(n)) ** 2) / (2.0 * sigma**2))


def cond_rhs(y, n, sigma):
    return 1.0 - (14.1 + 4.7 * math.sqrt(2.0 * math.log(y) / n)) * n / (y * sigma)


def norm_cond_checks(n: int, sigma: float = 1.0, trials: int = 2000, seed: int = 0,
                     z_factors=(2.25, 2.5, 3.0), rhs_targets=(0.05, 0.25, 0.5, 0.75, 0.9),
                     y_grid=None, threads=None) -> Tuple[TailCheckReport, TailCheckReport]:
    """Lower bounds on the CDFs of ``||A||`` and ``cond(A)`` for square Gaussian A.

    The norm grid is ``z = c sigma sqrt(n)`` for ``c`` in ``z_factors``; points
    below ``2 sigma sqrt(n)`` are dropped. The condition grid is ``y_grid`` if
    given, else the y values where the bound equals each of ``rhs_targets``;
    either way only points with bound >= 0.05 are kept, since below that the
    bound says nothing.
    """
    if not 0 < sigma <= 1:
        raise ValueError("the condition bound needs 0 < sigma <= 1")
    if n < 1:
        raise ValueError("n must be positive")

    def trial(i):
        s = np.linalg.svd(gaussian_matrix(n, n, 0.0, sigma, _gen(seed, i, 32)), compute_uv=False)
        return s[0], (s[0] / s[-1] if s[-1] > 0 else math.inf)

    res = run_trials(trial, trials, threads)
    norms = np.array([v[0] for v in res])
    conds = np.array([v[1] for v in res])

    zs = [c * sigma * math.sqrt(n) for c in z_factors]
    zs = [z for z in zs if z >= 2.0 * sigma * math.sqrt(n)]
    norm_rep = TailCheckReport(
        "theorem32_norm", tuple(zs), tuple(float(np.mean(norms <= z)) for z in zs),
        tuple(norm_rhs(z, n, sigma) for z in zs), trials, kind="lower")

    if y_grid is None:
        y_lo = max(1.0 + 1e-9, (14.1 * n) / sigma)
        y_grid = [brentq(lambda y, t=t: cond_rhs(y, n, sigma) - t, y_lo, 1e12)
                  for t in rhs_targets]
    ys = [float(y) for y in y_grid if y >= 1 and cond_rhs(y, n, sigma) >= COND_RHS_FLOOR]
    cond_rep = TailCheckReport(
        "theorem33_cond", tuple(ys), tuple(float(np.mean(conds <= y)) for y in ys),
        tuple(cond_rhs(y, n, sigma) for y in ys), trials, kind="lower",
        note=f"grid restricted to bound >= {COND_RHS_FLOOR}")
    return norm_rep, cond_rep


# --- exact integer checks ---------------------------------------------------

def exact_det(M) -> int:
    """Determinant of a square integer matrix by fraction-free (Bareiss) elimination."""
    a = [[int(v) for v in row] for row in M]
    k = len(a)
    if any(len(row) != k for row in a):
        raise ValueError("matrix must be square")
    sign, prev = 1, 1
    for p in range(k - 1):
        if a[p][p] == 0:
            swap = next((i for i in range(p + 1, k) if a[i][p] != 0), None)
            if swap is None:
                return 0
            a[p], a[swap] = a[swap], a[p]
            sign = -sign
        for i in range(p + 1, k):
            for j in range(p + 1, k):
                a[i][j] = (a[i][j] * a[p][p] - a[i][p] * a[p][j]) // prev
        prev = a[p][p]
    return sign * a[k - 1][k - 1]


def strongly_nonsingular(M) -> bool:
    """All leading principal minors are nonzero."""
    k = len(M)
    return all(exact_det([row[:j] for row in M[:j]]) != 0 for j in range(1, k + 1))


def appendixA_check(k_list=(2, 3, 4), cardinalities=(16, 64), trials: int = 5000,
                    seed: int = 0, structures=("general", "toeplitz"),
                    threads=None) -> List[TailCheckReport]:
    """Singularity frequencies of k x k matrices with entries uniform on {1..card}.

    One report per (structure, k, property) with the cardinalities as grid:
    singular frequency against ``k / card`` and not-strongly-nonsingular
    frequency against ``k (k + 1) / (2 card)``. Determinants are exact.
    """
    reports = []
    for si, structure in enumerate(structures):
        if structure not in ("general", "toeplitz"):
            raise ValueError("structures are 'general' or 'toeplitz'")
        for k in k_list:
            sing, strong = [], []
            for card in cardinalities:
                key = (si * 1000 + k) * 100000 + card

                def trial(i, k=k, card=card, key=key):
                    M = integer_matrix(k, card, _gen(seed, i, key),
                                       toeplitz=structure == "toeplitz").tolist()
                    return exact_det(M) == 0, not strongly_nonsingular(M)

                res = run_trials(trial, trials, threads)
                sing.append(float(np.mean([v[0] for v in res])))
                strong.append(float(np.mean([v[1] for v in res])))
            grid = tuple(float(c) for c in cardinalities)
            reports.append(TailCheckReport(
                f"appendixA_{structure}_k{k}_singular", grid, tuple(sing),
                tuple(k / c for c in cardinalities), trials))
            reports.append(TailCheckReport(
                f"appendixA_{structure}_k{k}_strong", grid, tuple(strong),
                tuple(k * (k + 1) / (2 * c) for c in cardinalities), trials))
    return reports
