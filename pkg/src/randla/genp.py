"""Gaussian elimination with no pivoting (GENP), block elimination, randomized
multiplicative preconditioning and iterative refinement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import solve_triangular

from .dense import as_matrix, as_vector, norm
from .errors import DimensionMismatch, PivotBreakdown
from .generators import MultiplierKind, draw_multiplier
from .rng import as_generator
from .structured import StructuredSpec, fft, structured_mul, structured_rmul

__all__ = [
    "GenpFactorization",
    "BlockFactorization",
    "PrecondReport",
    "genp_factor",
    "block_ge",
    "genp_solve",
    "iterative_refine",
    "randomized_genp",
    "relative_residual",
    "leading_block_bounds",
]

DEFAULT_PIVOT_FLOOR = 1e-300
MAX_MULTIPLIER_DRAWS = 3


@dataclass(frozen=True)
class GenpFactorization:
    """``A = L @ U`` from elimination with no row or column interchanges.

    ``pivots`` holds ``|U[k, k]|`` for every step. ``backward_error`` is
    ``||L U - A||_F / ||A||_F``, recorded but never asserted.
    """

    L: np.ndarray
    U: np.ndarray
    pivots: np.ndarray
    backward_error: float

    @property
    def pivot_min(self) -> float:
        return float(np.min(self.pivots))

    @property
    def pivot_max(self) -> float:
        return float(np.max(self.pivots))

    @property
    def n(self) -> int:
        return self.L.shape[0]


@dataclass(frozen=True)
class BlockFactorization:
    """Block LU: ``L`` unit lower triangular, ``U`` block upper triangular.

    ``offsets`` are the starting indices of the pivot blocks; ``block_norms``
    and ``block_inv_norms`` are the spectral norms of every pivot block and of
    its inverse.
    """

    L: np.ndarray
    U: np.ndarray
    offsets: List[int]
    block_norms: np.ndarray
    block_inv_norms: np.ndarray
    backward_error: float

    @property
    def n(self) -> int:
        return self.L.shape[0]


def _backward_error(L, U, A):
    denom = np.linalg.norm(A)
    with np.errstate(all="ignore"):
        return float(np.linalg.norm(L @ U - A) / denom) if denom else 0.0


def genp_factor(A, pivot_floor=DEFAULT_PIVOT_FLOOR) -> GenpFactorization:
    """Classical right-looking elimination, never reordering rows or columns.

    Raises :class:`PivotBreakdown` on ``|pivot| < pivot_floor``. With
    ``pivot_floor=0`` elimination always runs to completion and may return
    non-finite factors.
    """
    A = as_matrix(A)
    n, m = A.shape
    if n != m:
        raise DimensionMismatch(f"GENP needs a square matrix, got {n}x{m}")
    U = A.copy()
    L = np.eye(n)
    piv = np.empty(n)
    with np.errstate(all="ignore"):
        for k in range(n):
            p = U[k, k]
            piv[k] = abs(p)
            if abs(p) < pivot_floor:
                raise PivotBreakdown(k, abs(p), pivot_floor)
            if k + 1 < n:
                l = U[k + 1:, k] / p
                L[k + 1:, k] = l
                U[k + 1:, k:] -= np.outer(l, U[k, k:])
                U[k + 1:, k] = 0.0
    return GenpFactorization(L, U, piv, _backward_error(L, U, A))


def block_ge(A, block: int) -> BlockFactorization:
    """Block Gaussian elimination with pivot blocks of order ``block``.

    The last block is truncated when ``block`` does not divide n. Each step
    eliminates with the Schur complement ``A22 - A21 A11^{-1} A12``.
    Raises :class:`PivotBreakdown` if a pivot block is singular at working
    precision.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionMismatch("block elimination needs a square matrix")
    if block < 1:
        raise ValueError("block must be positive")
    S = A.copy()
    L = np.eye(n)
    U = np.zeros_like(A)
    offsets, norms, inv_norms = [], [], []
    eps = np.finfo(float).eps
    k = 0
    while k < n:
        b = min(block, n - k)
        A11 = S[k:k + b, k:k + b]
        s = np.linalg.svd(A11, compute_uv=False)
        if s[-1] <= b * eps * s[0] or s[0] == 0.0:
            raise PivotBreakdown(k, float(s[-1]), float(b * eps * s[0]))
        offsets.append(k)
        norms.append(s[0])
        inv_norms.append(1.0 / s[-1])
        U[k:k + b, k:] = S[k:k + b, k:]
        if k + b < n:
            L21 = np.linalg.solve(A11.T, S[k + b:, k:k + b].T).T
            L[k + b:, k:k + b] = L21
            S[k + b:, k + b:] -= L21 @ S[k:k + b, k + b:]
        k += b
    return BlockFactorization(L, U, offsets, np.array(norms), np.array(inv_norms),
                              _backward_error(L, U, A))


def _back_substitute(U, z):
    # IEEE semantics on an exactly zero pivot: produces inf/nan instead of raising
    y = np.array(z, dtype=np.float64)
    for k in range(U.shape[0] - 1, -1, -1):
        y[k] = (y[k] - U[k, k + 1:] @ y[k + 1:]) / U[k, k]
    return y


def genp_solve(F, b) -> np.ndarray:
    """Solve ``L U y = b`` by forward then backward substitution."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != F.n:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, expected {F.n}")
    with np.errstate(all="ignore"):
        z = solve_triangular(F.L, b, lower=True, unit_diagonal=True, check_finite=False)
        if isinstance(F, GenpFactorization):
            try:
                return solve_triangular(F.U, z, lower=False, check_finite=False)
            except np.linalg.LinAlgError:
                return _back_substitute(F.U, z)
        y = np.array(z, dtype=np.float64)
        ends = F.offsets[1:] + [F.n]
        for k, e in reversed(list(zip(F.offsets, ends))):
            rhs = y[k:e] - F.U[k:e, e:] @ y[e:]
            y[k:e] = np.linalg.solve(F.U[k:e, k:e], rhs)
        return y


def relative_residual(A, y, b) -> float:
    """``||A y - b|| / ||b||``; a non-finite ``y`` counts as an infinite residual."""
    if not np.all(np.isfinite(y)):
        return float("inf")
    with np.errstate(all="ignore"):
        return float(np.linalg.norm(A @ y - b) / np.linalg.norm(b))


def iterative_refine(A, solver, y0, b, steps: int) -> np.ndarray:
    """``steps`` rounds of ``y <- y + solve(b - A y)`` at working precision.

    ``solver`` is a factorization (solved with :func:`genp_solve`) or any
    callable mapping a residual to a correction.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    solve = solver if callable(solver) else (lambda r: genp_solve(solver, r))
    y = np.array(y0, dtype=np.float64)
    with np.errstate(all="ignore"):
        for _ in range(steps):
            y = y + solve(b - A @ y)
    return y


def leading_block_bounds(A):
    """``(N, N_minus)``: ``||A||_2`` and the max of ``||A_j^{-1}||_2`` over leading blocks."""
    A = as_matrix(A)
    n = A.shape[0]
    N = norm(A, "two")
    inv = [1.0 / np.linalg.svd(A[:j, :j], compute_uv=False)[-1] for j in range(1, n + 1)]
    return N, float(max(inv))


@dataclass
class PrecondReport:
    """Outcome of one preconditioned GENP solve.

    ``residuals[k]`` is the relative residual after k refinement steps, so
    ``residual == residuals[-1]``. ``raw_residual`` is plain GENP (floor 0,
    garbage accepted) on the same system, or ``None`` when not requested.
    """

    multiplier: MultiplierKind
    side: str
    refinement_steps: int
    residual: float
    residuals: List[float]
    raw_residual: Optional[float]
    pivot_min: float
    pivot_max: float
    raw_pivot_min: Optional[float] = None
    raw_pivot_max: Optional[float] = None
    draws: int = 1
    extra: dict = field(default_factory=dict)


def _left(M, X):
    return structured_mul(M, X) if isinstance(M, StructuredSpec) else M @ X


def _right(X, M):
    return structured_rmul(X, M) if isinstance(M, StructuredSpec) else X @ M


def _singular_circulant(M) -> bool:
    # eigenvalues of a circulant are the DFT of its first column
    if not (isinstance(M, StructuredSpec) and M.kind == "circulant"):
        return False
    n = M.n_rows
    lam = fft(M.first_col) if n & (n - 1) == 0 else np.fft.fft(M.first_col)
    mag = np.abs(lam)
    return bool(mag.min() <= 1e-12 * max(mag.max(), 1.0))


def _draw(kind, n, gen, max_tries=64):
    for _ in range(max_tries):
        M = draw_multiplier(kind, n, n, gen)
        if not _singular_circulant(M):
            return M
    return M


def randomized_genp(A, b, kind="circulant-sign", side="left", refine=0, rng=None,
                    pivot_floor=DEFAULT_PIVOT_FLOOR, contrast=True,
                    max_draws=MAX_MULTIPLIER_DRAWS):
    """Solve ``A y = b`` by GENP after random multiplication.

    ``side='left'`` factors ``M A``, ``'right'`` factors ``A N`` and
    ``'both'`` factors ``M A N``. Circulant multipliers with a zero DFT
    eigenvalue are redrawn before use. A :class:`PivotBreakdown` triggers a
    fresh draw, at most ``max_draws`` in total. Returns ``(y, report)``.
    """
    A = as_matrix(A)
    b = as_vector(b)
    n = A.shape[0]
    if A.shape[1] != n or b.size != n:
        raise DimensionMismatch("need a square A and matching b")
    if side not in ("left", "right", "both"):
        raise ValueError("side must be left, right or both")
    if refine not in (0, 1, 2):
        raise ValueError("refine must be 0, 1 or 2")
    if isinstance(kind, str):
        kind = MultiplierKind.parse(kind)
    gen = as_generator(rng)

    last_exc = None
    for draw in range(1, max_draws + 1):
        M = _draw(kind, n, gen) if side in ("left", "both") else None
        N = _draw(kind, n, gen) if side in ("right", "both") else None
        P = A
        if M is not None:
            P = _left(M, P)
        if N is not None:
            P = _right(P, N)
        try:
            F = genp_factor(P, pivot_floor)
        except PivotBreakdown as exc:
            last_exc = exc
            continue
        break
    else:
        raise last_exc

    def solve(r):
        rhs = _left(M, r) if M is not None else r
        z = genp_solve(F, rhs)
        return _left(N, z) if N is not None else z

    y = solve(b)
    residuals = [relative_residual(A, y, b)]
    for _ in range(refine):
        y = iterative_refine(A, solve, y, b, 1)
        residuals.append(relative_residual(A, y, b))

    raw_res = raw_min = raw_max = None
    if contrast:
        R = genp_factor(A, pivot_floor=0.0)
        raw_res = relative_residual(A, genp_solve(R, b), b)
        raw_min, raw_max = R.pivot_min, R.pivot_max

    report = PrecondReport(
        multiplier=kind,
        side=side,
        refinement_steps=refine,
        residual=residuals[-1],
        residuals=residuals,
        raw_residual=raw_res,
        pivot_min=F.pivot_min,
        pivot_max=F.pivot_max,
        raw_pivot_min=raw_min,
        raw_pivot_max=raw_max,
        draws=draw,
    )
    return y, report
