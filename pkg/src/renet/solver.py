"""Projected gradient descent over the l1 ball for the REN quadratic program."""
from __future__ import annotations

import numpy as np

from .model import Solution, SolverConfig, StepPolicy, TrimmedSurrogates
from .projection import project_l1_ball


class PowerIterationError(RuntimeError):
    """Power iteration did not settle; ``estimate`` holds the last value."""

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


class DivergenceError(RuntimeError):
    """An iterate became non-finite (step too large for the curvature)."""

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


def _check_beta(surrogates: TrimmedSurrogates, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != surrogates.gamma_vec.shape:
        raise ValueError(f"beta has shape {beta.shape}, expected {surrogates.gamma_vec.shape}")
    return beta


def objective(surrogates: TrimmedSurrogates, beta) -> float:
    """``0.5 * beta' G beta - <g, beta>``."""
    beta = _check_beta(surrogates, beta)
    return float(0.5 * beta @ (surrogates.gamma_mat @ beta) - surrogates.gamma_vec @ beta)


def gradient(surrogates: TrimmedSurrogates, beta) -> np.ndarray:
    beta = _check_beta(surrogates, beta)
    return surrogates.gamma_mat @ beta - surrogates.gamma_vec


def _power(A, shift, v, max_iters, tol):
    """Power iteration on ``A + shift I``; returns (rayleigh, vector, converged)."""
    est = v @ A @ v + shift
    for _ in range(max_iters):
        w = A @ v + shift * v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v, True
        v = w / norm
        new = v @ A @ v + shift
        if abs(new - est) <= tol * max(abs(new), np.finfo(float).tiny):
            return new, v, True
        est = new
    return est, v, False


def largest_eigenvalue(A, max_iters: int = 20000, tol: float = 1e-8, seed: int = 0) -> float:
    """Largest (signed) eigenvalue of a symmetric matrix by power iteration.

    The plain iteration finds the eigenvalue of largest magnitude; if that
    one is positive (and its eigenvector residual is small) it is the
    answer. Otherwise the iteration is rerun on ``A + c I`` with ``c`` the
    largest absolute row sum, which bounds the spectral radius and so
    makes the top eigenvalue dominant. Convergence means the Rayleigh
    quotient changed by at most ``tol`` relative.
    """
    A = np.asarray(A, dtype=float)
    p = A.shape[0]
    v0 = np.random.default_rng(seed).standard_normal(p)
    v0 /= np.linalg.norm(v0)
    lam, v, ok = _power(A, 0.0, v0, max_iters, tol)
    if ok and lam > 0 and np.linalg.norm(A @ v - lam * v) <= 1e-3 * lam:
        return float(lam)
    radius = np.abs(A).sum(axis=1)
    if np.all(2.0 * np.diag(A) - radius >= 0.0) and ok:
        # Gershgorin: no negative spectrum, so lam is already the top eigenvalue
        return float(lam)
    shift = float(radius.max())
    lam, v, ok = _power(A, shift, v0, max_iters, tol)
    if not ok:
        raise PowerIterationError(
            f"power iteration did not converge in {max_iters} iterations", float(lam - shift)
        )
    return float(lam - shift)


def estimate_eta(surrogates: TrimmedSurrogates, policy: StepPolicy = StepPolicy()) -> float:
    """Curvature constant eta; the gradient step is ``1 / eta``.

    Auto mode returns twice the estimated top eigenvalue of ``gamma_mat``.
    """
    if not policy.auto:
        return float(policy.eta)
    lam = largest_eigenvalue(surrogates.gamma_mat, policy.power_iters, policy.power_tol)
    if not lam > 0:
        raise ValueError(f"surrogate matrix has no positive curvature (lambda_max={lam})")
    return 2.0 * lam


def pgd_solve(surrogates: TrimmedSurrogates, config: SolverConfig, beta0=None) -> Solution:
    """Minimise the REN objective over ``||beta||_1 <= radius``.

    Iterates ``beta <- P(beta - grad(beta) / eta)`` from ``beta0`` (zero by
    default) until ``||beta_new - beta|| <= tol * max(1, ||beta||)`` or
    ``max_iters`` steps. ``distance_trace`` measures the first
    ``config.history`` stored iterates against the final one.
    """
    G, g = surrogates.gamma_mat, surrogates.gamma_vec
    R = config.radius
    if beta0 is None:
        beta = np.zeros_like(g)
    else:
        beta = _check_beta(surrogates, beta0).copy()
        if np.abs(beta).sum() > R * (1 + 1e-9):
            raise ValueError("beta0 lies outside the l1 ball")
    eta = estimate_eta(surrogates, config.step)
    step = 1.0 / eta

    keep = config.history
    history = [beta.copy()] if keep is None or keep > 0 else []
    objectives = [objective(surrogates, beta)]
    converged = False
    it = 0
    while it < config.max_iters:
        it += 1
        candidate = beta - step * (G @ beta - g)
        if not np.all(np.isfinite(candidate)):
            raise DivergenceError(f"non-finite iterate at iteration {it} (eta={eta:g})", it)
        new = project_l1_ball(candidate, R)
        change = np.linalg.norm(new - beta)
        scale = max(1.0, np.linalg.norm(beta))
        beta = new
        objectives.append(objective(surrogates, beta))
        if keep is None or len(history) < keep:
            history.append(beta.copy())
        if change <= config.tol * scale:
            converged = True
            break

    distance = None
    if history:
        distance = np.linalg.norm(np.asarray(history) - beta, axis=1)
    return Solution(
        beta_hat=beta,
        iterations=it,
        converged=converged,
        objective_trace=np.asarray(objectives),
        distance_trace=distance,
        eta=eta,
    )
