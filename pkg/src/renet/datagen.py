"""Synthetic sparse regression data with adversarial decoy outliers.

Authentic rows follow ``x ~ N(0, Sigma_x / n)``, ``y = <x, beta*> + eps``
with ``eps ~ N(0, sigma_eps^2 / n)``. Outlier rows are built to agree
exactly with a wrong-support linear model ``theta*`` fitted to the
authentic data on the complement of the true support, while their
on-support part pushes ``beta*`` towards its negation.

Every random artifact draws from its own child stream of the root seed,
so e.g. changing the outlier count leaves the authentic rows untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CovarianceSpec, Dataset, GroundTruth, SolverConfig, StepPolicy, TrimmedSurrogates
from .solver import pgd_solve

_STREAMS = {
    "support": 0,
    "signs": 1,
    "covariates": 2,
    "noise": 3,
    "outlier_signs": 4,
    "decoy_directions": 5,
    "permutation": 6,
}

RESAMPLE_LIMIT = 100
DEGENERACY_RATIO = 1e-6


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    p: int
    n: int
    k: int
    outlier_fraction: float = 0.0
    sigma_eps: float = 2.0
    covariance: CovarianceSpec = CovarianceSpec()
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.k < self.p):
            raise ValueError(f"need 1 <= k < p, got k={self.k}, p={self.p}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0.0 <= self.outlier_fraction:
            raise ValueError("outlier_fraction must be non-negative")
        if self.sigma_eps < 0:
            raise ValueError("sigma_eps must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_outliers(self) -> int:
        return int(round(self.outlier_fraction * self.n))

    @classmethod
    def correlated(cls, p: int, n: int, k: int, rho: float = 0.4, sigma_eps: float = 1.0, **kw):
        """Equicorrelated design; defaults mirror the dependent-column experiments."""
        return cls(p, n, k, sigma_eps=sigma_eps, covariance=CovarianceSpec("equicorrelated", rho), **kw)


def _rng(spec: GeneratorSpec, stream: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([spec.seed, _STREAMS[stream]]))


def generate_truth(spec: GeneratorSpec) -> GroundTruth:
    """Random k-sparse ``beta*`` with +-1 entries on a uniform random support.

    Row index sets are provisional (all rows authentic) until the dataset
    is assembled.
    """
    support = np.sort(_rng(spec, "support").choice(spec.p, size=spec.k, replace=False))
    signs = _rng(spec, "signs").choice(np.array([-1.0, 1.0]), size=spec.k)
    beta = np.zeros(spec.p)
    beta[support] = signs
    return GroundTruth(
        beta_star=beta,
        support=support,
        authentic_rows=np.arange(spec.n),
        outlier_rows=np.array([], dtype=np.int64),
        sigma_x=1.0,
        sigma_eps=spec.sigma_eps,
        covariance=spec.covariance,
    )


def generate_authentic(spec: GeneratorSpec, truth: GroundTruth) -> tuple[np.ndarray, np.ndarray]:
    n, p = spec.n, spec.p
    rng = _rng(spec, "covariates")
    g = rng.standard_normal((n, p))
    cov = spec.covariance
    if cov.kind == "equicorrelated":
        z = rng.standard_normal((n, 1))
        g = np.sqrt(1.0 - cov.rho) * g + np.sqrt(cov.rho) * z
    X = g / np.sqrt(n)
    y = X @ truth.beta_star
    if spec.sigma_eps > 0:
        y = y + (spec.sigma_eps / np.sqrt(n)) * _rng(spec, "noise").standard_normal(n)
    return X, y


def fit_decoy_model(X_off: np.ndarray, y: np.ndarray, radius: float, tol: float = 1e-10,
                    max_iters: int = 20000) -> np.ndarray:
    """Least squares of ``y`` on ``X_off`` over the l1 ball of ``radius``."""
    quad = TrimmedSurrogates(X_off.T @ X_off, X_off.T @ y, alpha=1.0, trim_count=0)
    # power iteration may need many steps on a rank-deficient Gram matrix
    lam = np.linalg.eigvalsh(quad.gamma_mat)[-1]
    config = SolverConfig(alpha=1.0, radius=radius, step=StepPolicy(eta=max(lam, 1e-300)), tol=tol,
                          max_iters=max_iters, history=0)
    return pgd_solve(quad, config).beta_hat


def generate_outliers(spec: GeneratorSpec, truth: GroundTruth,
                      authentic: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decoy rows ``(X_O, y_O)`` plus the wrong-support model ``theta*``.

    ``theta*`` has length ``p - k`` and is indexed by the off-support
    columns in increasing order.
    """
    n_o = spec.n_outliers
    if n_o < 1:
        raise ValueError("generate_outliers needs at least one outlier")
    X_a, y_a = authentic
    on = truth.support
    off = np.setdiff1d(np.arange(spec.p), on)
    theta = fit_decoy_model(X_a[:, off], y_a, radius=float(np.abs(truth.beta_star).sum()))
    theta_norm = np.linalg.norm(theta)
    if theta_norm == 0.0:
        raise GenerationError("decoy model theta* is exactly zero; use a larger n or another seed")

    X_o = np.empty((n_o, spec.p))
    S = _rng(spec, "outlier_signs").choice(np.array([-1.0, 1.0]), size=(n_o, spec.k))
    X_on = (3.0 / np.sqrt(spec.n)) * S
    y_o = -(X_on @ truth.beta_star[on])
    X_o[:, on] = X_on

    rng = _rng(spec, "decoy_directions")
    for i in range(n_o):
        for _ in range(RESAMPLE_LIMIT):
            B = rng.standard_normal(off.size)
            proj = B @ theta
            if abs(proj) >= DEGENERACY_RATIO * theta_norm:
                break
        else:
            raise GenerationError(f"could not draw a usable decoy direction for outlier {i}")
        X_o[i, off] = (y_o[i] / proj) * B
    return X_o, y_o, theta


def assemble_dataset(spec: GeneratorSpec, truth: GroundTruth,
                     authentic: tuple[np.ndarray, np.ndarray],
                     outliers: tuple[np.ndarray, np.ndarray] | None = None) -> Dataset:
    """Stack and shuffle the rows, recording where the outliers landed."""
    X_a, y_a = authentic
    if outliers is None:
        X_o, y_o = np.empty((0, spec.p)), np.empty(0)
    else:
        X_o, y_o = outliers[0], outliers[1]
    if X_a.shape[1] != spec.p or X_o.shape[1] != spec.p:
        raise ValueError("covariate blocks must have p columns")
    if X_a.shape[0] != y_a.size or X_o.shape[0] != y_o.size:
        raise ValueError("covariate and response row counts differ")
    n, n_o = X_a.shape[0], X_o.shape[0]
    X = np.vstack([X_a, X_o])
    y = np.concatenate([y_a, y_o])
    perm = _rng(spec, "permutation").permutation(n + n_o)
    # row r of the shuffled data is original row perm[r]
    X, y = X[perm], y[perm]
    is_outlier = perm >= n
    truth = GroundTruth(
        beta_star=truth.beta_star,
        support=truth.support,
        authentic_rows=np.flatnonzero(~is_outlier),
        outlier_rows=np.flatnonzero(is_outlier),
        sigma_x=truth.sigma_x,
        sigma_eps=truth.sigma_eps,
        covariance=truth.covariance,
    )
    return Dataset(X, y, n_authentic=n, n_outliers=n_o, truth=truth)


def generate_dataset(spec: GeneratorSpec) -> Dataset:
    truth = generate_truth(spec)
    authentic = generate_authentic(spec, truth)
    outliers = None
    if spec.n_outliers > 0:
        outliers = generate_outliers(spec, truth, authentic)[:2]
    return assemble_dataset(spec, truth, authentic, outliers)
