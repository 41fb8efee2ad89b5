"""Seeded generators for multipliers and test matrices.

All functions take ``rng`` as an :class:`~randla.rng.RngStream`, a numpy
``Generator`` or an int seed. Passing the same stream twice reproduces the
same draw; passing one ``Generator`` through several calls gives independent
successive draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dense import cond2, qr_positive
from .errors import (
    ConstructionFailed,
    Degenerate,
    DimensionMismatch,
    ProfileNotSorted,
    RankDeficient,
)
from .rng import as_generator
from .structured import StructuredSpec

__all__ = [
    "MultiplierKind",
    "gaussian_matrix",
    "uniform_matrix",
    "random_structured",
    "householder_sign",
    "draw_multiplier",
    "random_orthogonal",
    "paper_profile",
    "profile_matrix",
    "IllBlockSystem",
    "illblock_system",
    "integer_matrix",
]

TAGS = (
    "gaussian",
    "uniform_pm1",
    "toeplitz_gaussian",
    "circulant_gaussian",
    "circulant_sign",
    "householder_sign",
)

CLI_NAMES = {
    "gaussian": "gaussian",
    "uniform": "uniform_pm1",
    "toeplitz": "toeplitz_gaussian",
    "circulant": "circulant_gaussian",
    "circulant-sign": "circulant_sign",
    "householder-sign": "householder_sign",
}


@dataclass(frozen=True)
class MultiplierKind:
    """Sampling law and structure of a random multiplier.

    ``law`` selects the entry distribution for the gaussian, toeplitz and
    circulant tags: ``"normal"`` draws N(mu, sigma^2), ``"uniform"`` draws
    from [-1, 1) as in the reference experiments.
    """

    tag: str
    mu: float = 0.0
    sigma: float = 1.0
    law: str = "normal"

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown multiplier tag {self.tag!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.law not in ("normal", "uniform"):
            raise ValueError("law must be 'normal' or 'uniform'")

    @classmethod
    def parse(cls, name: str, law: str = "normal") -> "MultiplierKind":
        tag = CLI_NAMES.get(name, name.replace("-", "_"))
        return cls(tag, law=law)

    @property
    def structured(self) -> bool:
        return self.tag in ("toeplitz_gaussian", "circulant_gaussian", "circulant_sign")

    @property
    def cli_name(self) -> str:
        return {v: k for k, v in CLI_NAMES.items()}[self.tag]


def gaussian_matrix(m, n, mu=0.0, sigma=1.0, rng=None) -> np.ndarray:
    """m x n matrix of i.i.d. N(mu, sigma^2) entries."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return as_generator(rng).normal(mu, sigma, size=(m, n))


def uniform_matrix(m, n, rng=None) -> np.ndarray:
    """m x n matrix of i.i.d. uniform entries on [-1, 1)."""
    return as_generator(rng).uniform(-1.0, 1.0, size=(m, n))


def _entries(kind: MultiplierKind, size, gen):
    if kind.law == "uniform":
        return gen.uniform(-1.0, 1.0, size=size)
    return gen.normal(kind.mu, kind.sigma, size=size)


def random_structured(kind, m, n, rng=None) -> StructuredSpec:
    """Random Toeplitz (m + n - 1 parameters) or circulant (n parameters) spec."""
    if isinstance(kind, str):
        kind = MultiplierKind(kind)
    gen = as_generator(rng)
    if kind.tag == "toeplitz_gaussian":
        vals = _entries(kind, m + n - 1, gen)
        col = vals[:m].copy()
        row = np.concatenate([vals[:1], vals[m:]])
        return StructuredSpec("toeplitz", m, n, col, row)
    if kind.tag in ("circulant_gaussian", "circulant_sign"):
        if m != n:
            raise DimensionMismatch(f"circulant multipliers are square, got {m}x{n}")
        if kind.tag == "circulant_sign":
            col = gen.choice(np.array([-1.0, 1.0]), size=n)
        else:
            col = _entries(kind, n, gen)
        return StructuredSpec("circulant", n, n, col)
    raise ValueError(f"{kind.tag} is not a structured kind")


def householder_sign(n, rng=None, max_attempts=64, u=None, v=None) -> np.ndarray:
    """``I - u v^T / (u^T v)`` with u, v random sign vectors.

    This reproduces the printed formula literally; it annihilates ``u`` and
    is therefore singular. Pairs with ``u^T v = 0`` are redrawn.
    """
    gen = as_generator(rng)
    signs = np.array([-1.0, 1.0])
    for _ in range(max_attempts):
        uu = np.asarray(u, dtype=float) if u is not None else gen.choice(signs, size=n)
        vv = np.asarray(v, dtype=float) if v is not None else gen.choice(signs, size=n)
        d = float(uu @ vv)
        if d != 0.0:
            return np.eye(n) - np.outer(uu, vv) / d
        if u is not None and v is not None:
            break
    raise Degenerate(f"u^T v = 0 in every one of the attempts (n={n})")


def draw_multiplier(kind, m, n, rng=None):
    """Draw an m x n multiplier: a dense array or a :class:`StructuredSpec`."""
    if isinstance(kind, str):
        kind = MultiplierKind.parse(kind)
    gen = as_generator(rng)
    if kind.structured:
        return random_structured(kind, m, n, gen)
    if kind.tag == "gaussian":
        if kind.law == "uniform":
            return uniform_matrix(m, n, gen)
        return gaussian_matrix(m, n, kind.mu, kind.sigma, gen)
    if kind.tag == "uniform_pm1":
        return uniform_matrix(m, n, gen)
    if kind.tag == "householder_sign":
        if m != n:
            raise DimensionMismatch("householder multipliers are square")
        return householder_sign(n, gen)
    raise ValueError(kind.tag)


def random_orthogonal(n, rng=None) -> np.ndarray:
    """Q factor (positive-diagonal normalization) of an n x n Gaussian matrix."""
    gen = as_generator(rng)
    for attempt in range(2):
        try:
            return qr_positive(gaussian_matrix(n, n, rng=gen)).Q
        except RankDeficient:
            if attempt:
                raise
    raise AssertionError("unreachable")


def paper_profile(n, rho, tail=1e-10) -> np.ndarray:
    """Singular values 1/j for j <= rho followed by ``tail`` for j > rho."""
    if not 0 <= rho <= n:
        raise ValueError("need 0 <= rho <= n")
    s = np.full(n, tail)
    s[:rho] = 1.0 / np.arange(1, rho + 1)
    return s


def profile_matrix(n, sigmas, rng=None, return_factors=False):
    """``S diag(sigmas) T^T`` with random orthogonal S and T.

    With ``return_factors=True`` returns ``(A, S, T)``.
    """
    s = np.asarray(sigmas, dtype=float)
    if s.shape != (n,):
        raise ValueError(f"need {n} singular values, got shape {s.shape}")
    if np.any(s <= 0) or np.any(np.diff(s) > 0):
        raise ProfileNotSorted("singular values must be positive and non-increasing")
    gen = as_generator(rng)
    S = random_orthogonal(n, gen)
    T = random_orthogonal(n, gen)
    A = (S * s) @ T.T
    if return_factors:
        return A, S, T
    return A


class IllBlockSystem(NamedTuple):
    A: np.ndarray
    b: np.ndarray
    y: np.ndarray


def illblock_system(n, rng=None, max_tries=8, kappa_max=1e4, block_kappa_min=1e8,
                    small=1e-16) -> IllBlockSystem:
    """Well conditioned n x n system whose leading n/2 block is ill conditioned.

    The leading block has singular values 1 except for its trailing quarter,
    which is set to ``small``; the other three blocks are uniform on [-1, 1).
    The default ``small`` puts those values at roundoff level, which is what
    makes unpivoted elimination of the raw system return garbage.
    Candidates are redrawn until ``cond(A) <= kappa_max`` and the leading block
    has ``cond >= block_kappa_min``. ``b = A @ y`` for a uniform ``y``.
    """
    if n < 4 or n % 2:
        raise ValueError("n must be even and at least 4")
    gen = as_generator(rng)
    h = n // 2
    q = max(1, h // 4)
    sig = np.ones(h)
    sig[h - q:] = small
    for _ in range(max_tries):
        A = uniform_matrix(n, n, gen)
        A[:h, :h] = profile_matrix(h, sig, gen)
        if cond2(A, tol=0) <= kappa_max and cond2(A[:h, :h], tol=0) >= block_kappa_min:
            y = uniform_matrix(n, 1, gen).ravel()
            return IllBlockSystem(A, A @ y, y)
    raise ConstructionFailed(f"no qualifying {n}x{n} matrix in {max_tries} draws")


def integer_matrix(k, cardinality, rng=None, toeplitz=False, cols=None) -> np.ndarray:
    """k x cols (default square) integer matrix with entries uniform on {1..cardinality}.

    Returned with ``dtype=object`` holding Python ints so exact determinants
    never overflow.
    """
    gen = as_generator(rng)
    c = k if cols is None else cols
    if toeplitz:
        vals = gen.integers(1, cardinality + 1, size=k + c - 1)
        i = np.arange(k)[:, None]
        j = np.arange(c)[None, :]
        # index k-1+i-j maps the diagonal offset onto the parameter vector
        M = vals[k - 1 + i - j]
    else:
        M = gen.integers(1, cardinality + 1, size=(k, c))
    return np.array([[int(x) for x in row] for row in M], dtype=object)
