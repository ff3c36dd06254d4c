"""Trimmed inner products and the robust covariance surrogates.

A trimmed inner product drops the ``n_o`` elementwise products of largest
magnitude and sums the rest with their signs. Among products of equal
magnitude the lower row index is kept first, and kept products are
accumulated sequentially in ascending row order, so every entry is
reproducible bit for bit regardless of how the fill is scheduled.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .model import Dataset, TrimmedSurrogates


def _trimmed_column_sums(Q: np.ndarray, trim_count: int) -> np.ndarray:
    """Trimmed sums down each column of the product block ``Q`` (m x c)."""
    m = Q.shape[0]
    keep_count = m - trim_count
    if trim_count == 0:
        kept = Q
    else:
        A = np.abs(Q)
        # magnitude of the last kept product, per column
        cut = np.partition(A, keep_count - 1, axis=0)[keep_count - 1]
        below = A < cut
        at_cut = A == cut
        room = keep_count - below.sum(axis=0)
        tie_rank = np.cumsum(at_cut, axis=0)
        keep = below | (at_cut & (tie_rank <= room))
        kept = np.where(keep, Q, 0.0)
    # add.accumulate is strictly sequential, unlike the pairwise np.sum
    return np.cumsum(kept, axis=0)[-1]


def _check_trim(m: int, trim_count: int) -> None:
    if trim_count < 0:
        raise ValueError("trim_count must be non-negative")
    if trim_count >= m:
        raise ValueError(f"trim_count={trim_count} leaves nothing to sum over {m} entries")


def trimmed_inner_product(u, v, trim_count: int) -> float:
    """Sum of ``u_i * v_i`` over all but the ``trim_count`` largest |u_i * v_i|."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.ndim != 1 or u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    _check_trim(u.size, trim_count)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise ValueError("inputs must be finite")
    return float(_trimmed_column_sums((u * v)[:, None], trim_count)[0])


def trimmed_gram(X, trim_count: int, n_jobs: int = 1, block: int = 256) -> np.ndarray:
    """Matrix of trimmed inner products between all column pairs of ``X``.

    Only the upper triangle is computed; the lower one is a mirror, so the
    result is exactly symmetric.
    """
    X = np.asarray(X, dtype=float)
    m, p = X.shape
    _check_trim(m, trim_count)
    G = np.empty((p, p))

    def fill_row(i):
        for j0 in range(i, p, block):
            j1 = min(j0 + block, p)
            G[i, j0:j1] = _trimmed_column_sums(X[:, i : i + 1] * X[:, j0:j1], trim_count)

    if n_jobs == 1:
        for i in range(p):
            fill_row(i)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(fill_row, range(p)))
    iu = np.triu_indices(p, 1)
    G[iu[1], iu[0]] = G[iu]
    return G


def trimmed_cross(X, y, trim_count: int) -> np.ndarray:
    """Trimmed inner products of every column of ``X`` with ``y``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise ValueError(f"dimension mismatch: X has {X.shape[0]} rows, y has shape {y.shape}")
    _check_trim(X.shape[0], trim_count)
    return _trimmed_column_sums(X * y[:, None], trim_count)


def build_surrogates(data: Dataset, alpha: float, trim_count: int, n_jobs: int = 1) -> TrimmedSurrogates:
    """Assemble the robust pair for the REN program.

    ``gamma_mat = alpha * trimmed_gram(X) + (1 - alpha) * I`` and
    ``gamma_vec = trimmed_cross(X, y)``. With ``alpha == 0`` the matrix is
    exactly the identity and the Gram fill is skipped.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    X, y = data.covariates, data.responses
    _check_trim(X.shape[0], trim_count)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("data must be finite")
    p = X.shape[1]
    if alpha == 0.0:
        gamma_mat = np.eye(p)
    else:
        gamma_mat = alpha * trimmed_gram(X, trim_count, n_jobs=n_jobs) + (1.0 - alpha) * np.eye(p)
    gamma_vec = trimmed_cross(X, y, trim_count)
    return TrimmedSurrogates(gamma_mat, gamma_vec, alpha=float(alpha), trim_count=int(trim_count))
