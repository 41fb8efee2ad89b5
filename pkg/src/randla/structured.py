"""Circulant and Toeplitz matrix-vector products in O((m+n) log(m+n)).

The FFT is an iterative radix-2 Cooley-Tukey transform vectorized over
butterflies; callers pad to a power of two. Toeplitz products embed the m x n
matrix into a circulant of the next power of two >= m + n - 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dense import as_vector
from .errors import DimensionMismatch, LengthNotPowerOfTwo

__all__ = [
    "StructuredSpec",
    "circulant",
    "toeplitz",
    "fft",
    "circ_mul",
    "toeplitz_mul",
    "structured_mul",
    "structured_rmul",
]


@dataclass(frozen=True)
class StructuredSpec:
    """Compact circulant or Toeplitz matrix.

    Circulant: entry (i, j) is ``first_col[(i - j) % n]``.
    Toeplitz: entry (i, j) is ``first_col[i - j]`` for i >= j, else
    ``first_row[j - i]``.
    """

    kind: str
    n_rows: int
    n_cols: int
    first_col: np.ndarray
    first_row: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "circulant":
            if not (self.n_rows == self.n_cols == len(self.first_col)):
                raise DimensionMismatch("circulant must be square with n = len(first_col)")
        elif self.kind == "toeplitz":
            if self.first_row is None:
                raise ValueError("toeplitz spec needs first_row")
            if len(self.first_col) != self.n_rows or len(self.first_row) != self.n_cols:
                raise DimensionMismatch("first_col/first_row lengths must match the shape")
            if self.first_row[0] != self.first_col[0]:
                raise ValueError("first_row[0] must equal first_col[0]")
        else:
            raise ValueError(f"unknown structured kind {self.kind!r}")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def densify(self) -> np.ndarray:
        i = np.arange(self.n_rows)[:, None]
        j = np.arange(self.n_cols)[None, :]
        if self.kind == "circulant":
            return self.first_col[(i - j) % self.n_rows]
        d = i - j
        return np.where(d >= 0, self.first_col[np.clip(d, 0, None)],
                        self.first_row[np.clip(-d, 0, None)])

    def transpose(self) -> "StructuredSpec":
        if self.kind == "circulant":
            col = np.concatenate([self.first_col[:1], self.first_col[:0:-1]])
            return StructuredSpec("circulant", self.n_cols, self.n_rows, col)
        return StructuredSpec("toeplitz", self.n_cols, self.n_rows,
                              self.first_row.copy(), self.first_col.copy())


def circulant(first_col) -> StructuredSpec:
    c = as_vector(first_col)
    return StructuredSpec("circulant", c.size, c.size, c)


def toeplitz(first_col, first_row) -> StructuredSpec:
    c, r = as_vector(first_col), as_vector(first_row)
    return StructuredSpec("toeplitz", c.size, r.size, c, r)


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def fft(x, direction="forward") -> np.ndarray:
    """Radix-2 DFT along the last axis; the inverse carries the 1/N factor."""
    a = np.asarray(x, dtype=np.complex128)
    N = a.shape[-1]
    if not _is_pow2(N):
        raise LengthNotPowerOfTwo(f"length {N} is not a power of two")
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    sign = -1.0 if direction == "forward" else 1.0
    bits = N.bit_length() - 1
    # bit-reversal permutation
    idx = np.arange(N)
    rev = np.zeros(N, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    a = a[..., rev].copy()
    half = 1
    while half < N:
        w = np.exp(sign * 1j * np.pi * np.arange(half) / half)
        a = a.reshape(a.shape[:-1] + (N // (2 * half), 2, half))
        even = a[..., 0, :]
        odd = a[..., 1, :] * w
        a = np.stack([even + odd, even - odd], axis=-2).reshape(a.shape[:-3] + (N,))
        half *= 2
    if direction == "inverse":
        a /= N
    return a


def _safe_norm(v):
    # scaled so tiny or huge entries neither underflow nor overflow when squared
    m = np.max(np.abs(v), initial=0.0)
    return m * np.linalg.norm(v / m) if m > 0 else 0.0


def _circ_core(col, x):
    # col: (n,), x: (n,) or (n, k)
    fc = fft(col)
    fx = fft(np.moveaxis(x, 0, -1))
    y = fft(fc * fx, "inverse")
    y = np.moveaxis(y, -1, 0)
    scale = _safe_norm(col) * _safe_norm(x)
    if np.max(np.abs(y.imag), initial=0.0) > 1e-10 * scale:
        raise FloatingPointError("imaginary residue in circulant product")
    return y.real


def circ_mul(spec: StructuredSpec, x) -> np.ndarray:
    """Circulant product ``C @ x`` for power-of-two n via FFT.

    Other sizes are embedded in a power-of-two circulant (as a Toeplitz
    matrix) so the radix-2 contract still holds.
    """
    if spec.kind != "circulant":
        raise ValueError("circ_mul needs a circulant spec")
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != spec.n_cols:
        raise DimensionMismatch(f"x has length {x.shape[0]}, expected {spec.n_cols}")
    n = spec.n_rows
    if _is_pow2(n):
        return _circ_core(spec.first_col, x)
    row = np.concatenate([spec.first_col[:1], spec.first_col[:0:-1]])
    return toeplitz_mul(StructuredSpec("toeplitz", n, n, spec.first_col, row), x)


def toeplitz_mul(spec: StructuredSpec, x) -> np.ndarray:
    """Toeplitz product via circulant embedding of size next_pow2(m + n - 1)."""
    if spec.kind != "toeplitz":
        raise ValueError("toeplitz_mul needs a toeplitz spec")
    x = np.asarray(x, dtype=np.float64)
    m, n = spec.shape
    if x.shape[0] != n:
        raise DimensionMismatch(f"x has length {x.shape[0]}, expected {n}")
    N = _next_pow2(m + n - 1)
    col = np.zeros(N)
    col[:m] = spec.first_col
    # wrap the row entries 1..n-1 to the tail so entry (i, j), i < j, reads first_row[j - i]
    if n > 1:
        col[N - n + 1:] = spec.first_row[:0:-1]
    xp = np.zeros((N,) + x.shape[1:])
    xp[:n] = x
    return _circ_core(col, xp)[:m]


def structured_mul(spec: StructuredSpec, x) -> np.ndarray:
    """``spec @ x`` for a vector or a matrix with ``n_cols`` rows."""
    if spec.kind == "circulant":
        return circ_mul(spec, x)
    return toeplitz_mul(spec, x)


def structured_rmul(X, spec: StructuredSpec) -> np.ndarray:
    """``X @ spec`` computed as ``(spec.T @ X.T).T``."""
    X = np.asarray(X, dtype=np.float64)
    return structured_mul(spec.transpose(), X.T).T
