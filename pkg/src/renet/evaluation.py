"""Recovery metrics, support refinement and empirical diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GroundTruth, Solution, TrimmedSurrogates

CONDITION_LIMIT = 1e12
FLOOR_RATIO = 0.99
# margins this close to zero are rounding, not violations
RE_ROUNDING = 1e-12


class RefinementError(np.linalg.LinAlgError):
    pass


def top_k_support(beta_hat, k: int) -> np.ndarray:
    """Indices of the k largest |beta_hat|; ties go to the lower index."""
    order = np.argsort(-np.abs(np.asarray(beta_hat, dtype=float)), kind="stable")
    return np.sort(order[:k])


def threshold_support(beta_hat, threshold: float = 1e-6) -> np.ndarray:
    return np.flatnonzero(np.abs(np.asarray(beta_hat, dtype=float)) > threshold)


def support_recovery_count(beta_hat, truth: GroundTruth) -> int:
    beta_hat = np.asarray(beta_hat, dtype=float)
    if beta_hat.shape != truth.beta_star.shape:
        raise ValueError("beta_hat length does not match beta_star")
    return int(np.intersect1d(top_k_support(beta_hat, truth.k), truth.support).size)


def l2_recovery_error(beta_hat, truth: GroundTruth) -> float:
    """``||beta_hat - beta*|| / ||beta*||``."""
    scale = np.linalg.norm(truth.beta_star)
    if scale == 0.0:
        raise ValueError("relative error is undefined for beta* == 0")
    return float(np.linalg.norm(np.asarray(beta_hat, dtype=float) - truth.beta_star) / scale)


def refine(surrogates: TrimmedSurrogates, beta_hat, k: int) -> np.ndarray:
    """Re-fit on the top-k support of ``beta_hat`` and zero everything else.

    Solves ``G[S, S] z = g[S]``; raises RefinementError when that system
    is singular or worse conditioned than 1e12.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    S = top_k_support(beta_hat, k)
    G = surrogates.gamma_mat[np.ix_(S, S)]
    cond = np.linalg.cond(G)
    if not cond <= CONDITION_LIMIT:
        raise RefinementError(f"restricted system is ill-conditioned (cond={cond:.3g})")
    out = np.zeros(surrogates.p)
    out[S] = np.linalg.solve(G, surrogates.gamma_vec[S])
    return out


@dataclass(frozen=True)
class REParameters:
    """Curvatures and tolerance of the lower/upper restricted eigenvalue bounds."""

    mu1: float
    mu2: float
    tau: float

    def __post_init__(self):
        if not self.mu1 > 0:
            raise ValueError("mu1 must be positive")
        if not self.mu2 >= self.mu1:
            raise ValueError("mu2 must be >= mu1")
        if not self.tau >= 0:
            raise ValueError("tau must be non-negative")

    @classmethod
    def from_covariance(cls, alpha: float, lambda_min: float, lambda_max: float) -> "REParameters":
        """Parameters the REN surrogate satisfies w.h.p. for a covariance with this spectrum."""
        return cls(
            mu1=alpha * lambda_min / 2 + (1 - alpha),
            mu2=3 * alpha * lambda_max / 2 + (1 - alpha),
            tau=alpha * lambda_min / 8,
        )


@dataclass(frozen=True)
class REReport:
    trials: int
    lower_violations: int
    lower_min_margin: float
    upper_violations: int
    upper_min_margin: float

    @property
    def violations(self) -> int:
        return self.lower_violations + self.upper_violations


def sample_cone_directions(p: int, k: int, trials: int, seed: int) -> np.ndarray:
    """Unit directions with at most 4k nonzeros, hence ``||t||_1 <= 2 sqrt(k) ||t||_2``."""
    rng = np.random.default_rng(seed)
    s_max = min(4 * k, p)
    out = np.zeros((trials, p))
    for t in range(trials):
        s = rng.integers(1, s_max + 1)
        idx = rng.choice(p, size=s, replace=False)
        out[t, idx] = rng.standard_normal(s)
        out[t] /= np.linalg.norm(out[t])
    return out


def check_lower_re(surrogates: TrimmedSurrogates, params: REParameters, k: int, trials: int,
                   seed: int = 0, extra_directions=None) -> REReport:
    """Count sampled cone directions violating the lower and upper RE bounds.

    Margins are evaluated on unit-l2 directions: the lower margin is
    ``t'Gt - mu1 + tau ||t||_1^2`` and the upper one
    ``mu2 + tau ||t||_1^2 - t'Gt``; a margin below -1e-12 (relative) is a
    violation.
    ``extra_directions`` (rows) are appended to the random sample.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    T = sample_cone_directions(surrogates.p, k, trials, seed)
    if extra_directions is not None:
        extra = np.atleast_2d(np.asarray(extra_directions, dtype=float))
        T = np.vstack([T, extra / np.linalg.norm(extra, axis=1, keepdims=True)])
    quad = np.einsum("ij,jk,ik->i", T, surrogates.gamma_mat, T)
    l1sq = np.abs(T).sum(axis=1) ** 2
    lower = quad - params.mu1 + params.tau * l1sq
    upper = params.mu2 + params.tau * l1sq - quad
    slack = RE_ROUNDING * np.maximum(1.0, np.abs(quad))
    return REReport(
        trials=T.shape[0],
        lower_violations=int(np.count_nonzero(lower < -slack)),
        lower_min_margin=float(lower.min()),
        upper_violations=int(np.count_nonzero(upper < -slack)),
        upper_min_margin=float(upper.min()),
    )


@dataclass(frozen=True)
class ConvergenceReport:
    gamma_fit: float
    floor_index: int


def convergence_diagnostic(solution: Solution) -> ConvergenceReport:
    """Fit a geometric contraction rate to the squared distance-to-final trace.

    The fitted segment ends at the first step whose ratio
    ``g[t+1] / g[t]`` exceeds 0.99, or where the trace hits zero.
    """
    d = solution.distance_trace
    if d is None or len(d) < 10:
        raise ValueError("distance_trace needs at least 10 entries")
    g = np.asarray(d, dtype=float) ** 2
    floor = len(g) - 1
    for t in range(len(g) - 1):
        if g[t] <= 0.0 or g[t + 1] <= 0.0 or g[t + 1] / g[t] > FLOOR_RATIO:
            floor = t
            break
    if floor < 1:
        return ConvergenceReport(gamma_fit=float("nan"), floor_index=floor)
    t = np.arange(floor + 1)
    slope = np.polyfit(t, np.log(g[: floor + 1]), 1)[0]
    return ConvergenceReport(gamma_fit=float(np.exp(slope)), floor_index=floor)


@dataclass(frozen=True)
class RegimeCheck:
    sample_size_ok: bool
    outlier_fraction_ok: bool
    required_n: float
    max_outlier_fraction: float


def regime_check(n: int, n_outliers: int, p: int, k: int, lambda_min: float, sigma_x: float = 1.0,
                 c_n: float = 1.0, c_o: float = 1.0) -> RegimeCheck:
    """Advisory test of the sample-size and outlier-fraction conditions.

    The guarantees hold up to unspecified constants; ``c_n`` and ``c_o``
    stand in for them.
    """
    logp = np.log(p)
    required_n = c_n * sigma_x**4 / lambda_min**2 * k * logp
    max_frac = c_o * lambda_min / (sigma_x**2 * k * logp)
    return RegimeCheck(
        sample_size_ok=bool(n >= required_n),
        outlier_fraction_ok=bool(n_outliers / n <= max_frac),
        required_n=float(required_n),
        max_outlier_fraction=float(max_frac),
    )
