"""Euclidean projection onto the l1 ball."""
from __future__ import annotations

import numpy as np

FEASIBILITY_RTOL = 1e-12
_MAX_NUDGES = 64


def l1_threshold(a: np.ndarray, radius: float) -> float:
    """Soft-threshold level ``theta`` with ``sum(max(a - theta, 0)) == radius``.

    ``a`` holds non-negative magnitudes whose sum exceeds ``radius``.
    """
    mu = np.sort(a)[::-1]
    csum = np.cumsum(mu)
    ranks = np.arange(1, mu.size + 1)
    # largest rank whose entry survives the threshold it induces
    rho = np.flatnonzero(mu * ranks > csum - radius)[-1]
    return (csum[rho] - radius) / (rho + 1.0)


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Closest point to ``v`` (in l2) with l1 norm at most ``radius``.

    Sort-based threshold search, O(p log p). Feasible inputs are returned
    unchanged (as a copy).
    """
    v = np.asarray(v, dtype=float)
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a non-finite vector")
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    theta = l1_threshold(a, radius)
    z = np.maximum(a - theta, 0.0)
    # a - theta cancels when |v| >> radius; nudge theta up until feasible
    for _ in range(_MAX_NUDGES):
        excess = z.sum() - radius
        if excess <= FEASIBILITY_RTOL * radius:
            break
        theta = max(theta + excess / np.count_nonzero(z), np.nextafter(theta, np.inf))
        z = np.maximum(a - theta, 0.0)
    return np.sign(v) * z
