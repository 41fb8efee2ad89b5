"""Numerical rank without pivoting or orthogonalization of the input.

Candidate ranks are probed by forming ``A^T G_s`` for the first s columns of a
single Gaussian matrix G and asking a condition probe whether that product is
full rank and well conditioned. The probe only uses products with ``B`` and
``B^T`` (Power or Lanczos iteration on ``B^T B``).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .dense import as_matrix
from .errors import NoConvergence
from .generators import gaussian_matrix
from .rng import as_generator

__all__ = [
    "extremal_sv_estimate",
    "cond_probe",
    "nrank_search",
    "nrank_probe_compress",
]

CONV_TOL = 1e-4


def _settled(new, old, floor):
    return abs(new - old) <= CONV_TOL * max(abs(new), floor)


def _power(B, iters, gen, info, kappa_cutoff=None):
    n = B.shape[1]
    eps = np.finfo(float).eps

    def gram(x):
        return B.T @ (B @ x)

    def run(op, label, estimate, scale, cutoff=None):
        # settled: the estimate stopped moving and the eigen-residual certifies it
        # to about 1% (or to roundoff when the target sits at the noise floor)
        v = gen.standard_normal(n)
        v /= np.linalg.norm(v)
        prev = None
        for it in range(1, iters + 1):
            w = op(v)
            lam = float(v @ w)
            nw = np.linalg.norm(w)
            est = estimate(lam)
            if nw == 0.0 or (cutoff is not None and est < cutoff):
                info[label] = it
                return lam
            floor = n * eps * max(scale, abs(lam))
            if prev is not None and _settled(est, prev, floor):
                if np.linalg.norm(w - lam * v) <= max(1e-2 * abs(est), floor):
                    info[label] = it
                    return lam
            v = w / nw
            prev = est
        raise NoConvergence(f"power iteration ({label}) did not settle in {iters} steps")

    lam_max = run(gram, "iterations_max", lambda lam: lam, 0.0)
    if lam_max <= 0.0:
        info["iterations"] = info["iterations_max"]
        return 0.0, 0.0
    shift = 1.01 * lam_max
    # shift - mu never drops below lambda_min, so crossing the cutoff is conclusive
    cutoff = None if kappa_cutoff is None else lam_max / kappa_cutoff**2
    mu = run(lambda x: shift * x - gram(x), "iterations_min", lambda mu: shift - mu, lam_max,
             cutoff)
    lam_min = max(shift - mu, 0.0)
    info["iterations"] = info["iterations_max"] + info["iterations_min"]
    return math.sqrt(lam_max), math.sqrt(lam_min)


def _lanczos(B, iters, gen, info, exhaustive=False):
    # full reorthogonalization of the (small) Krylov basis keeps Ritz values clean
    n = B.shape[1]
    k_max = min(iters, n)
    V = np.zeros((n, k_max + 1))
    v = gen.standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    alpha, beta = [], []
    prev = None
    lam_min = lam_max = 0.0
    for j in range(k_max):
        w = B.T @ (B @ V[:, j])
        a = float(V[:, j] @ w)
        alpha.append(a)
        w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
        w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
        bnorm = float(np.linalg.norm(w))
        theta = eigh_tridiagonal(np.array(alpha), np.array(beta), eigvals_only=True)
        lam_min, lam_max = float(theta[0]), float(theta[-1])
        info["iterations"] = j + 1
        exhausted = j + 1 == n or bnorm <= 1e-14 * max(abs(lam_max), np.finfo(float).tiny)
        if exhausted:
            break
        if prev is not None and not exhaustive:
            floor = np.finfo(float).eps * n * abs(lam_max)
            if _settled(lam_max, prev[1], floor) and _settled(lam_min, prev[0], floor):
                break
        prev = (lam_min, lam_max)
        beta.append(bnorm)
        V[:, j + 1] = w / bnorm
    else:
        if k_max < n:
            raise NoConvergence(f"Lanczos did not settle in {iters} steps")
    return math.sqrt(max(lam_max, 0.0)), math.sqrt(max(lam_min, 0.0))


def extremal_sv_estimate(A, method="lanczos", iters=200, rng=None, return_info=False,
                         exhaustive=False, kappa_cutoff=None):
    """Estimate ``(sigma_max, sigma_min)`` of ``A`` from products with A and A^T.

    ``power`` runs the Power Method on ``A^T A`` and then on
    ``1.01 lambda_max I - A^T A``; ``lanczos`` tridiagonalizes ``A^T A``.
    Raises :class:`NoConvergence` when an estimate of ``sigma^2`` still moves
    by more than 1e-4 relative after ``iters`` steps. Lanczos stops early only
    when both extremal Ritz values settle. ``exhaustive=True`` disables that
    early stop so Lanczos runs ``min(iters, n)`` steps; once the Krylov space
    is exhausted its Ritz values are exact up to roundoff, which matters when
    a cluster of tiny singular values would otherwise be found late.

    The power estimate of ``sigma_min`` only counts as settled once the
    eigen-residual certifies it to about 1%. With ``kappa_cutoff`` the
    ``sigma_min`` phase may instead stop as soon as its running estimate,
    always an upper bound, certifies ``sigma_max / sigma_min > kappa_cutoff``;
    the returned ``sigma_min`` is then that bound.
    """
    A = as_matrix(A)
    if iters < 1:
        raise ValueError("iters must be positive")
    gen = as_generator(rng)
    info = {"method": method}
    if method == "power":
        est = _power(A, iters, gen, info, kappa_cutoff)
    elif method == "lanczos":
        est = _lanczos(A, iters, gen, info, exhaustive)
    else:
        raise ValueError("method must be 'power' or 'lanczos'")
    return (est, info) if return_info else est


def cond_probe(B, kappa_threshold=1e6, method="lanczos", iters=None, rng=None) -> bool:
    """True when ``B`` looks full rank with ``sigma_max / sigma_min <= kappa_threshold``.

    Lanczos probes run without early stopping; Power probes stop early once
    the condition number is certified to exceed the threshold (see
    :func:`extremal_sv_estimate`).
    """
    if kappa_threshold <= 1:
        raise ValueError("kappa_threshold must exceed 1")
    B = as_matrix(B)
    if iters is None:
        iters = 4 * B.shape[1] + 20
    if method == "lanczos":
        smax, smin = extremal_sv_estimate(B, method, iters, rng, exhaustive=True)
    else:
        smax, smin = extremal_sv_estimate(B, method, iters, rng, kappa_cutoff=kappa_threshold)
    return bool(smin > 0.0 and smax / smin <= kappa_threshold)


def nrank_probe_compress(G_rho, rng=None, oversample: int = 0) -> np.ndarray:
    """``F G_rho`` for a Gaussian (rho + oversample) x m matrix F.

    With the default square probe the condition number keeps the heavy tail
    of a square Gaussian; a few extra rows tame it.
    """
    G_rho = as_matrix(G_rho)
    m, rho = G_rho.shape
    if oversample < 0:
        raise ValueError("oversample must be non-negative")
    rows = min(rho + oversample, m)
    return gaussian_matrix(rows, m, rng=as_generator(rng)) @ G_rho


def _next_candidate(lo, hi, policy):
    if policy == "binary":
        return -(-(lo + hi) // 2)
    if policy == "linear_down":
        # probe downward from the top in steps of a quarter of the interval
        return hi - max(1, -(-(hi - lo) // 4)) + 1
    raise ValueError("policy must be 'binary' or 'linear_down'")


def nrank_search(A, rho_minus=0, rho_plus=None, kappa_threshold=1e6, policy="binary",
                 method="lanczos", iters=None, rng=None, compress=False,
                 return_probes=False):
    """Numerical rank of ``A`` in ``[rho_minus, rho_plus]`` and a basis of its
    leading right singular space.

    One Gaussian ``G`` (m x rho_plus) is drawn up front. A candidate s passes
    when ``A^T G_s`` is full rank and well conditioned, which happens for
    s <= nrank(A); the search keeps the largest passing candidate. Returns
    ``(rho, B)`` with ``B = A^T G_rho``. With ``compress=True`` each probe is
    applied to ``F (A^T G_s)`` of order s instead.
    """
    A = as_matrix(A)
    if A.shape[0] < A.shape[1]:
        A = A.T
    m, n = A.shape
    if rho_plus is None:
        rho_plus = n
    if not 0 <= rho_minus < rho_plus <= n:
        raise ValueError(f"need 0 <= rho_minus < rho_plus <= {n}")
    gen = as_generator(rng)
    G = gaussian_matrix(m, rho_plus, rng=gen)
    if iters is None:
        iters = 4 * rho_plus + 20
    lo, hi = rho_minus, rho_plus
    probes = []
    while lo < hi:
        s = _next_candidate(lo, hi, policy)
        Bp = A.T @ G[:, :s]
        target = nrank_probe_compress(Bp, gen) if compress else Bp
        passed = cond_probe(target, kappa_threshold, method, iters, gen)
        probes.append((s, passed))
        if passed:
            lo = s
        else:
            hi = s - 1
    B = A.T @ G[:, :lo]
    if return_probes:
        return lo, B, probes
    return lo, B
