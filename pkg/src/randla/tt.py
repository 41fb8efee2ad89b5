"""Tensor-Train decomposition of dense tensors.

Layout convention: the first index varies fastest (Fortran order), so the
k-th unfolding is a plain reshape to ``(n_1 ... n_k) x (n_{k+1} ... n_d)``.
Core k has shape ``(r_{k-1}, n_k, r_k)`` with ``r_0 = r_d = 1``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .dense import qr_positive
from .errors import (
    IndexOutOfRange,
    RankDeficient,
    RankDeficientSketch,
    RankTooLarge,
    ShapeMismatch,
    TooLarge,
)
from .generators import gaussian_matrix
from .rng import as_generator

__all__ = [
    "DenseTensor",
    "TtTrain",
    "unfold",
    "tt_svd",
    "tt_randomized",
    "tt_reconstruct",
    "tt_error",
    "write_tensor_binary",
    "read_tensor_binary",
    "write_tensor_csv",
    "read_tensor_csv",
]

DEFAULT_MAX_ENTRIES = 10**8
MAX_SKETCH_DRAWS = 3
SKETCH_CAPTURE_TOL = 1e-12


@dataclass(frozen=True)
class DenseTensor:
    """A d-way array (d >= 2) stored flat with i_1 fastest."""

    dims: Tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) < 2 or any(n < 1 for n in dims):
            raise ValueError(f"need d >= 2 positive dims, got {dims}")
        data = np.asarray(self.data, dtype=np.float64).ravel(order="F")
        if data.size != math.prod(dims):
            raise ShapeMismatch(f"{data.size} entries for dims {dims}")
        if not np.all(np.isfinite(data)):
            raise ValueError("tensor entries must be finite")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, a) -> "DenseTensor":
        a = np.asarray(a, dtype=np.float64)
        return cls(a.shape, a.ravel(order="F"))

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def array(self) -> np.ndarray:
        return self.data.reshape(self.dims, order="F")

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True)
class TtTrain:
    """Order-3 cores ``G_k`` of shape ``(r_{k-1}, n_k, r_k)``.

    ``tails`` holds the Frobenius norm discarded at each sweep step when the
    train came from :func:`tt_svd`; it is ``None`` otherwise.
    """

    cores: Tuple[np.ndarray, ...]
    tails: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        cores = tuple(np.asarray(G, dtype=np.float64) for G in self.cores)
        if len(cores) < 2:
            raise ValueError("a train needs at least two cores")
        prev = 1
        for k, G in enumerate(cores):
            if G.ndim != 3 or G.shape[0] != prev or min(G.shape) < 1:
                raise ShapeMismatch(f"core {k} has shape {G.shape}, expected ({prev}, n, r)")
            prev = G.shape[2]
        if prev != 1:
            raise ShapeMismatch("last core must end with rank 1")
        object.__setattr__(self, "cores", cores)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(G.shape[1] for G in self.cores)

    @property
    def ranks(self) -> Tuple[int, ...]:
        return tuple(G.shape[2] for G in self.cores[:-1])


def _as_tensor(T) -> DenseTensor:
    return T if isinstance(T, DenseTensor) else DenseTensor.from_array(T)


def unfold(T, k: int) -> np.ndarray:
    """k-th unfolding: rows (i_1..i_k), columns (i_{k+1}..i_d), first index fastest."""
    T = _as_tensor(T)
    if not 1 <= k <= T.d - 1:
        raise IndexOutOfRange(f"k must lie in [1, {T.d - 1}], got {k}")
    rows = math.prod(T.dims[:k])
    return T.data.reshape((rows, -1), order="F")


def _check_ranks(dims, ranks):
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(dims) - 1:
        raise ValueError(f"need {len(dims) - 1} ranks, got {len(ranks)}")
    for k, r in enumerate(ranks, start=1):
        limit = min(math.prod(dims[:k]), math.prod(dims[k:]))
        if r < 1 or r > limit:
            raise RankTooLarge(f"r_{k} = {r} outside [1, {limit}]")
    return ranks


def _pad_cols(X, r):
    if X.shape[1] >= r:
        return X[:, :r]
    return np.hstack([X, np.zeros((X.shape[0], r - X.shape[1]))])


def _pad_rows(X, r):
    if X.shape[0] >= r:
        return X[:r]
    return np.vstack([X, np.zeros((r - X.shape[0], X.shape[1]))])


def tt_svd(T, ranks: Optional[Sequence[int]] = None, tol: Optional[float] = None) -> TtTrain:
    """TT-SVD sweep with fixed ranks or a relative tolerance.

    In tolerance mode each step keeps the smallest r_k with
    ``sigma_{r_k+1} <= tol ||T||_F / sqrt(d-1)``. The returned train records
    the discarded tail of every step, and
    ``||T - reconstruct||_F^2 <= sum(tails^2)``.
    """
    T = _as_tensor(T)
    if (ranks is None) == (tol is None):
        raise ValueError("give exactly one of ranks and tol")
    dims, d = T.dims, T.d
    if ranks is not None:
        ranks = _check_ranks(dims, ranks)
    else:
        if tol < 0:
            raise ValueError("tol must be non-negative")
        delta = tol * T.norm() / math.sqrt(d - 1)
    cores, tails = [], []
    C = T.data
    r_prev = 1
    for k in range(d - 1):
        M = C.reshape((r_prev * dims[k], -1), order="F")
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        if ranks is not None:
            r = ranks[k]
        else:
            r = max(1, int(np.count_nonzero(s > delta)))
        tails.append(float(np.linalg.norm(s[r:])))
        cores.append(_pad_cols(U, r).reshape((r_prev, dims[k], r), order="F"))
        C = _pad_rows(s[:, None] * Vt, r)
        r_prev = r
    cores.append(C.reshape((r_prev, dims[-1], 1), order="F"))
    return TtTrain(tuple(cores), tuple(tails))


def tt_randomized(T, ranks: Sequence[int], oversample: int = 0, rng=None,
                  max_draws: int = MAX_SKETCH_DRAWS) -> TtTrain:
    """TT sweep with each truncated SVD replaced by a Gaussian sketch.

    Step k sketches the current unfolding as ``M H`` with ``r_k + oversample``
    Gaussian columns, orthonormalizes it to ``Q`` and keeps the leading
    r_k directions of ``Q`` after a small SVD of ``Q^T M``. Only matrices of
    width ``r_k + oversample`` are ever decomposed. A rank-deficient sketch is
    kept when it already captures the unfolding (its width exceeds the rank)
    and redrawn otherwise, ``max_draws`` draws in total.
    """
    T = _as_tensor(T)
    if oversample < 0:
        raise ValueError("oversample must be non-negative")
    dims, d = T.dims, T.d
    ranks = _check_ranks(dims, ranks)
    gen = as_generator(rng)
    cores = []
    C = T.data
    r_prev = 1
    for k in range(d - 1):
        M = C.reshape((r_prev * dims[k], -1), order="F")
        r = ranks[k]
        width = min(r + oversample, M.shape[0], M.shape[1])
        for _ in range(max_draws):
            H = gaussian_matrix(M.shape[1], width, rng=gen)
            S = M @ H
            try:
                Q = qr_positive(S).Q
                break
            except RankDeficient:
                # a sketch wider than rank(M) is deficient yet still spans range(M)
                Q = np.linalg.qr(S)[0]
                if np.linalg.norm(M - Q @ (Q.T @ M)) <= SKETCH_CAPTURE_TOL * np.linalg.norm(M):
                    break
        else:
            raise RankDeficientSketch(f"sketch of unfolding {k + 1} stayed rank deficient")
        W = Q.T @ M
        Uw, s, Vt = np.linalg.svd(W, full_matrices=False)
        left = _pad_cols(Q @ Uw, r)
        cores.append(left.reshape((r_prev, dims[k], r), order="F"))
        C = _pad_rows(s[:, None] * Vt, r)
        r_prev = r
    cores.append(C.reshape((r_prev, dims[-1], 1), order="F"))
    return TtTrain(tuple(cores))


def tt_reconstruct(train: TtTrain, max_entries: int = DEFAULT_MAX_ENTRIES) -> DenseTensor:
    """Contract the cores left to right into a dense tensor."""
    dims = train.dims
    total = math.prod(dims)
    if total > max_entries:
        raise TooLarge(f"{total} entries exceed the cap of {max_entries}")
    G0 = train.cores[0]
    X = G0.reshape((G0.shape[1], G0.shape[2]), order="F")
    for G in train.cores[1:]:
        r, n, r_next = G.shape
        X = X @ G.reshape((r, n * r_next), order="F")
        X = X.reshape((-1, r_next), order="F")
    return DenseTensor(dims, X.ravel(order="F"))


def tt_error(T, train: TtTrain) -> float:
    """``||T - reconstruct(train)||_F``."""
    T = _as_tensor(T)
    if T.dims != train.dims:
        raise ShapeMismatch(f"tensor dims {T.dims} vs train dims {train.dims}")
    return float(np.linalg.norm(T.data - tt_reconstruct(train).data))


# On-disk formats. Binary: little-endian uint64 d, d uint64 dims, then the
# entries as little-endian float64 with i_1 fastest. CSV: first line holds the
# comma-separated dims, then one entry per line in the same order.

def write_tensor_binary(path, T) -> None:
    T = _as_tensor(T)
    with open(path, "wb") as fh:
        fh.write(struct.pack(f"<Q{T.d}Q", T.d, *T.dims))
        fh.write(T.data.astype("<f8").tobytes())


def read_tensor_binary(path) -> DenseTensor:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ValueError("truncated tensor file")
    (d,) = struct.unpack_from("<Q", raw, 0)
    head = 8 * (d + 1)
    if len(raw) < head:
        raise ValueError("truncated tensor header")
    dims = struct.unpack_from(f"<{d}Q", raw, 8)
    body = np.frombuffer(raw, dtype="<f8", offset=head)
    if body.size != math.prod(dims):
        raise ShapeMismatch(f"{body.size} entries for dims {dims}")
    return DenseTensor(dims, body.astype(np.float64))


def write_tensor_csv(path, T) -> None:
    T = _as_tensor(T)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(str(n) for n in T.dims) + "\n")
        for v in T.data:
            fh.write(f"{v:.17g}\n")


def read_tensor_csv(path) -> DenseTensor:
    with open(path) as fh:
        dims = tuple(int(x) for x in fh.readline().strip().split(","))
        vals = [float(line) for line in fh if line.strip()]
    return DenseTensor(dims, np.array(vals))
