"""Dense matrix substrate: validation, norms, QR with positive diagonal, SVD,
pseudo-inverse, condition number and numerical rank.

Matrices are plain 2-D ``float64`` numpy arrays. :func:`as_matrix` is the single
entry point that rejects empty or non-finite input; every public function here
routes its arguments through it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidMatrix,
    NoConvergence,
    NonUniqueSubspaceWarning,
    RankDeficient,
    ZeroMatrix,
)

__all__ = [
    "DEFAULT_RANK_TOL",
    "QrFactors",
    "SvdFactors",
    "as_matrix",
    "as_vector",
    "cond2",
    "leading_basis",
    "norm",
    "numerical_rank",
    "pseudo_inverse",
    "qr_mgs",
    "qr_positive",
    "svd",
    "trailing_basis",
    "truncate_svd",
]

DEFAULT_RANK_TOL = 1e-6


def as_matrix(A, copy=False) -> np.ndarray:
    """Coerce ``A`` to a finite, non-empty 2-D float64 array."""
    M = np.array(A, dtype=np.float64) if copy else np.asarray(A, dtype=np.float64)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise InvalidMatrix(f"expected a 2-D array, got ndim={M.ndim}")
    if M.size == 0:
        raise InvalidMatrix("empty matrices are not admitted")
    if not np.all(np.isfinite(M)):
        raise InvalidMatrix("matrix contains NaN or Inf")
    return M


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise InvalidMatrix("empty vector")
    if not np.all(np.isfinite(v)):
        raise InvalidMatrix("vector contains NaN or Inf")
    return v


@dataclass(frozen=True)
class SvdFactors:
    """Full SVD ``A = S @ diag(sigma) @ T.T``.

    ``S`` is m x m, ``T`` is n x n, ``sigma`` has length min(m, n) and is
    non-increasing.
    """

    S: np.ndarray
    sigma: np.ndarray
    T: np.ndarray

    @property
    def shape(self):
        return (self.S.shape[0], self.T.shape[0])

    def reconstruct(self) -> np.ndarray:
        m, n = self.shape
        k = self.sigma.size
        return (self.S[:, :k] * self.sigma) @ self.T[:, :k].T


@dataclass(frozen=True)
class QrFactors:
    Q: np.ndarray
    R: np.ndarray


def svd(A) -> SvdFactors:
    """Full SVD with a deterministic sign convention.

    Each left singular vector is flipped (together with its right partner) so
    that its largest-magnitude entry is positive.
    """
    A = as_matrix(A)
    try:
        U, s, Vh = np.linalg.svd(A, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    T = Vh.T.copy()
    k = s.size
    idx = np.argmax(np.abs(U[:, :k]), axis=0)
    signs = np.sign(U[idx, np.arange(k)])
    signs[signs == 0] = 1.0
    U[:, :k] *= signs
    T[:, :k] *= signs
    return SvdFactors(S=U, sigma=s, T=T)


def norm(A, kind="two") -> float:
    """Matrix norm; ``kind`` is one of ``one``, ``two``, ``inf``, ``frobenius``."""
    A = as_matrix(A)
    if kind in ("one", 1):
        return float(np.abs(A).sum(axis=0).max())
    if kind in ("inf", np.inf):
        return float(np.abs(A).sum(axis=1).max())
    if kind in ("frobenius", "fro"):
        return float(np.sqrt(np.sum(A * A)))
    if kind in ("two", 2):
        return float(np.linalg.svd(A, compute_uv=False)[0])
    raise ValueError(f"unknown norm kind {kind!r}")


def qr_positive(A, rank_tol=1e-13) -> QrFactors:
    """Thin Householder QR normalized so that ``diag(R) > 0``.

    Raises :class:`RankDeficient` when the smallest ``|R[i, i]|`` is not above
    ``rank_tol * ||A||_2``.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m < n:
        raise RankDeficient(f"{m}x{n} matrix cannot have full column rank")
    Q, R = np.linalg.qr(A, mode="reduced")
    d = np.diag(R)
    scale = norm(A, "two")
    if scale == 0.0 or np.min(np.abs(d)) <= rank_tol * scale:
        raise RankDeficient(
            f"min |R_ii| = {np.min(np.abs(d)):.3e} vs threshold {rank_tol * scale:.3e}"
        )
    signs = np.where(d < 0, -1.0, 1.0)
    return QrFactors(Q=Q * signs, R=R * signs[:, None])


def qr_mgs(A) -> QrFactors:
    """Modified Gram-Schmidt QR; reference implementation for cross-checks."""
    A = as_matrix(A, copy=True)
    m, n = A.shape
    Q = A.copy()
    R = np.zeros((n, n))
    for j in range(n):
        R[j, j] = np.linalg.norm(Q[:, j])
        if R[j, j] == 0.0:
            raise RankDeficient(f"column {j} is dependent")
        Q[:, j] /= R[j, j]
        R[j, j + 1:] = Q[:, j] @ Q[:, j + 1:]
        Q[:, j + 1:] -= np.outer(Q[:, j], R[j, j + 1:])
    return QrFactors(Q=Q, R=R)


def numerical_rank(A, tol=DEFAULT_RANK_TOL) -> int:
    """Count singular values with ``sigma_j >= tol * sigma_1`` (0 for A = O)."""
    if not 0 <= tol < 1:
        raise ValueError("tol must lie in [0, 1)")
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s >= tol * s[0]))


def cond2(A, tol=DEFAULT_RANK_TOL) -> float:
    """Spectral condition number ``sigma_1 / sigma_rho`` with rho = nrank(A, tol).

    ``tol=0`` gives ``sigma_1 / sigma_min`` (``inf`` for exactly singular input).
    """
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    if s[0] == 0.0:
        raise ZeroMatrix("condition number of the zero matrix is undefined")
    rho = int(np.count_nonzero(s >= tol * s[0]))
    if s[rho - 1] == 0.0:
        return float("inf")
    return float(s[0] / s[rho - 1])


def pseudo_inverse(A, tol=None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse, zeroing singular values below ``tol * sigma_1``."""
    A = as_matrix(A)
    if tol is None:
        tol = max(A.shape) * np.finfo(np.float64).eps
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    keep = s > tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vh.T * inv) @ U.T


def truncate_svd(F: SvdFactors, rho: int) -> np.ndarray:
    """Nearest matrix of rank at most ``rho`` in the spectral norm."""
    k = F.sigma.size
    if not 0 <= rho <= k:
        raise ValueError(f"rho must lie in [0, {k}]")
    return (F.S[:, :rho] * F.sigma[:rho]) @ F.T[:, :rho].T


def leading_basis(F: SvdFactors, rho: int, side="right") -> np.ndarray:
    """First ``rho`` left (``side='left'``) or right singular vectors.

    Emits :class:`NonUniqueSubspaceWarning` when ``sigma[rho-1]`` and
    ``sigma[rho]`` tie to 1e-12 relative.
    """
    k = F.sigma.size
    if not 1 <= rho <= k:
        raise ValueError(f"rho must lie in [1, {k}]")
    if rho < k:
        a, b = F.sigma[rho - 1], F.sigma[rho]
        if a - b <= 1e-12 * max(a, np.finfo(float).tiny):
            warnings.warn(
                f"sigma[{rho - 1}] and sigma[{rho}] coincide; subspace is not unique",
                NonUniqueSubspaceWarning,
                stacklevel=2,
            )
    if side == "left":
        return F.S[:, :rho].copy()
    if side == "right":
        return F.T[:, :rho].copy()
    raise ValueError("side must be 'left' or 'right'")


def trailing_basis(F: SvdFactors, rho: int, side="right") -> np.ndarray:
    """Columns of S (left) or T (right) after the first ``rho``."""
    if side == "left":
        return F.S[:, rho:].copy()
    if side == "right":
        return F.T[:, rho:].copy()
    raise ValueError("side must be 'left' or 'right'")
