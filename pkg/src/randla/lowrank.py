"""Randomized bases of leading singular spaces and rank-rho approximation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .dense import as_matrix, norm
from .errors import RankDeficient
from .generators import MultiplierKind, draw_multiplier, gaussian_matrix
from .rng import as_generator
from .structured import StructuredSpec, structured_rmul

__all__ = [
    "LowRankResult",
    "project_onto_basis",
    "approx_basis",
    "proto_lowrank",
    "power_transform",
    "sampled_residual_check",
]

MAX_REDRAWS = 3


@dataclass
class LowRankResult:
    """Output of :func:`proto_lowrank`.

    ``basis`` is n x rho with orthonormal columns approximating the leading
    right singular space; ``approx = A @ basis @ basis.T``; ``residual`` is
    ``||approx - A||_2 / ||A||_2``.
    """

    rho: int
    basis: np.ndarray
    approx: np.ndarray
    residual: float
    status: str
    tau: float
    draws: int = 1

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def project_onto_basis(A, T, orthonormal=False, side="right") -> np.ndarray:
    """Project ``A`` onto the span of the columns of ``T``.

    ``side='right'`` returns ``A T (T^T T)^{-1} T^T`` (rows projected);
    ``side='left'`` returns ``T (T^T T)^{-1} T^T A``. With ``orthonormal=True``
    the Gram inverse is skipped.
    """
    A = as_matrix(A)
    T = as_matrix(T)
    if T.shape[1] > T.shape[0]:
        raise RankDeficient("basis has more columns than rows")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if orthonormal:
        P = T.T
    else:
        s = np.linalg.svd(T, compute_uv=False)
        if s[-1] <= 1e-12 * s[0]:
            raise RankDeficient(f"basis is numerically rank deficient (cond {s[0] / s[-1]:.2e})")
        P = scipy.linalg.solve(T.T @ T, T.T, assume_a="pos")
    if side == "right":
        return (A @ T) @ P
    return T @ (P @ A)


def _times(X, M):
    return structured_rmul(X, M) if isinstance(M, StructuredSpec) else X @ M


def approx_basis(A, rho_plus, kind="gaussian", side="right_space", rng=None) -> np.ndarray:
    """Randomized basis ``A^T G`` (right space) or ``A H`` (left space)."""
    A = as_matrix(A)
    m, n = A.shape
    if not 1 <= rho_plus <= min(m, n):
        raise ValueError(f"rho_plus must lie in [1, {min(m, n)}]")
    if isinstance(kind, str):
        kind = MultiplierKind.parse(kind)
    gen = as_generator(rng)
    if side == "right_space":
        return _times(A.T, draw_multiplier(kind, m, rho_plus, gen))
    if side == "left_space":
        return _times(A, draw_multiplier(kind, n, rho_plus, gen))
    raise ValueError("side must be 'right_space' or 'left_space'")


def _auto_rank(s, gap_floor=1e-3):
    # split at the widest gap sigma_j / sigma_{j+1} whose tail sits below gap_floor * sigma_1
    if s.size < 2 or s[0] == 0.0:
        return s.size
    tiny = np.finfo(float).tiny
    ratios = s[:-1] / np.maximum(s[1:], tiny)
    ok = s[1:] < gap_floor * s[0]
    if not ok.any():
        return s.size
    ratios = np.where(ok, ratios, 0.0)
    return int(np.argmax(ratios)) + 1


def proto_lowrank(A, rho_plus, tau=1e-6, tau_prime=1e-6, kind="gaussian", rng=None,
                  max_draws=MAX_REDRAWS, norm_A: Optional[float] = None) -> LowRankResult:
    """Rank-rho approximation from a randomized basis of the right leading space.

    Stage 1 forms ``T' = A^T G``; stage 2 picks the smallest s with
    ``sigma_{s+1}(T') <= tau ||A||`` and takes an orthonormal basis of the
    corresponding leading column space of ``T'``; stage 3 accepts
    ``A T T^T`` when its relative error is at most ``tau_prime``.
    ``tau='auto'`` instead cuts ``T'`` at its widest singular-value gap below
    1e-3 relative. Failed checks are retried with fresh multipliers,
    ``max_draws`` draws in total.
    """
    A = as_matrix(A)
    m, n = A.shape
    gen = as_generator(rng)
    nA = norm(A, "two") if norm_A is None else float(norm_A)
    if nA == 0.0:
        return LowRankResult(0, np.zeros((n, 0)), np.zeros_like(A), 0.0, "ok",
                             0.0 if tau == "auto" else tau)
    result = None
    for draw in range(1, max_draws + 1):
        Tp = approx_basis(A, rho_plus, kind, "right_space", gen)
        U, s, _ = np.linalg.svd(Tp, full_matrices=False)
        if tau == "auto":
            sv = _auto_rank(s)
            used_tau = float(s[sv] / nA) if sv < s.size else 0.0
        else:
            used_tau = float(tau)
            sv = int(np.count_nonzero(s > tau * nA))
        T = U[:, :sv]
        approx = (A @ T) @ T.T
        res = norm(approx - A, "two") / nA
        status = "ok" if res <= tau_prime else "failure"
        result = LowRankResult(sv, T, approx, res, status, used_tau, draw)
        if status == "ok":
            break
    return result


def power_transform(A, h: int) -> np.ndarray:
    """``(A A^T)^h A``; singular values become ``sigma_j ** (2h + 1)``."""
    if h < 0:
        raise ValueError("h must be non-negative")
    A = as_matrix(A)
    B = A.copy()
    for _ in range(h):
        B = A @ (A.T @ B)
    return B


def sampled_residual_check(A, Ahat, rho1=1, rho2=1, tau=1e-6, rng=None) -> bool:
    """Cheap acceptance test ``||K^T (A - Ahat) L|| <= tau ||K|| ||A|| ||L||``."""
    A = as_matrix(A)
    Ahat = as_matrix(Ahat)
    m, n = A.shape
    gen = as_generator(rng)
    K = gaussian_matrix(m, rho1, rng=gen)
    L = gaussian_matrix(n, rho2, rng=gen)
    lhs = norm(K.T @ (A - Ahat) @ L, "two")
    return bool(lhs <= tau * norm(K, "two") * norm(A, "two") * norm(L, "two"))
