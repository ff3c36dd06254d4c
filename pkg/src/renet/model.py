"""Shared data types for the robust elastic net.

All containers are frozen dataclasses; array fields are copied on
construction and marked read-only so instances can be shared between
workers without defensive copies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CovarianceSpec:
    """Population covariance of the authentic rows.

    ``kind`` is ``"identity"`` or ``"equicorrelated"``; ``rho`` is the
    common off-diagonal correlation for the latter.
    """

    kind: str = "identity"
    rho: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "equicorrelated"):
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "identity" and self.rho != 0.0:
            raise ValueError("identity covariance takes rho=0")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")

    def matrix(self, p: int) -> np.ndarray:
        sigma = np.full((p, p), self.rho)
        np.fill_diagonal(sigma, 1.0)
        return sigma

    def eigenvalue_range(self, p: int) -> tuple[float, float]:
        """(lambda_min, lambda_max) of the p x p covariance."""
        if self.kind == "identity" or p == 1:
            return 1.0, 1.0
        return 1.0 - self.rho, 1.0 + (p - 1) * self.rho


@dataclass(frozen=True)
class GroundTruth:
    beta_star: np.ndarray
    support: np.ndarray
    authentic_rows: np.ndarray
    outlier_rows: np.ndarray
    sigma_x: float = 1.0
    sigma_eps: float = 0.0
    covariance: CovarianceSpec = field(default_factory=CovarianceSpec)

    def __post_init__(self):
        beta = _frozen(self.beta_star)
        support = _frozen(self.support, dtype=np.int64)
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "authentic_rows", _frozen(self.authentic_rows, np.int64))
        object.__setattr__(self, "outlier_rows", _frozen(self.outlier_rows, np.int64))
        if beta.ndim != 1:
            raise ValueError("beta_star must be a vector")
        if not np.array_equal(np.flatnonzero(beta), np.sort(support)):
            raise ValueError("support does not match the nonzeros of beta_star")
        rows = np.concatenate([self.authentic_rows, self.outlier_rows])
        if not np.array_equal(np.sort(rows), np.arange(rows.size)):
            raise ValueError("authentic and outlier rows must partition 0..N-1")

    @property
    def k(self) -> int:
        return int(self.support.size)


@dataclass(frozen=True)
class Dataset:
    """Observed (possibly corrupted) regression data.

    ``covariates`` has ``n_authentic + n_outliers`` rows. ``truth`` is set
    only for synthetic data.
    """

    covariates: np.ndarray
    responses: np.ndarray
    n_authentic: int
    n_outliers: int
    truth: Optional[GroundTruth] = None

    def __post_init__(self):
        X = _frozen(self.covariates)
        y = _frozen(self.responses)
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "responses", y)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError("covariates must be a 2-d array with p >= 1 columns")
        if y.shape != (X.shape[0],):
            raise ValueError(f"responses length {y.shape} does not match {X.shape[0]} rows")
        if self.n_outliers < 0 or self.n_authentic < 0:
            raise ValueError("row counts must be non-negative")
        if X.shape[0] != self.n_authentic + self.n_outliers:
            raise ValueError("row count != n_authentic + n_outliers")
        if self.truth is not None:
            if self.truth.beta_star.size != X.shape[1]:
                raise ValueError("beta_star length does not match p")
            if self.truth.outlier_rows.size != self.n_outliers:
                raise ValueError("truth lists a different number of outliers")

    @property
    def n_rows(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]


@dataclass(frozen=True)
class TrimmedSurrogates:
    """Robust stand-ins for the covariance and the covariance times beta."""

    gamma_mat: np.ndarray
    gamma_vec: np.ndarray
    alpha: float
    trim_count: int

    def __post_init__(self):
        G = _frozen(self.gamma_mat)
        g = _frozen(self.gamma_vec)
        object.__setattr__(self, "gamma_mat", G)
        object.__setattr__(self, "gamma_vec", g)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValueError("gamma_mat must be square")
        if g.shape != (G.shape[0],):
            raise ValueError("gamma_vec length does not match gamma_mat")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.trim_count < 0:
            raise ValueError("trim_count must be non-negative")

    @property
    def p(self) -> int:
        return self.gamma_vec.size


@dataclass(frozen=True)
class StepPolicy:
    """How the curvature constant eta (step = 1/eta) is chosen.

    ``eta=None`` estimates it from the surrogate matrix by power iteration.
    """

    eta: Optional[float] = None
    power_iters: int = 20000
    power_tol: float = 1e-8

    def __post_init__(self):
        if self.eta is not None and not self.eta > 0:
            raise ValueError("fixed eta must be positive")
        if self.power_iters < 1 or not self.power_tol > 0:
            raise ValueError("power_iters >= 1 and power_tol > 0 required")

    @property
    def auto(self) -> bool:
        return self.eta is None


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    radius: float
    step: StepPolicy = field(default_factory=StepPolicy)
    tol: float = 1e-8
    max_iters: int = 5000
    # leading iterates kept for distance_trace; None keeps all, 0 disables
    history: Optional[int] = 1000

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.history is not None and self.history < 0:
            raise ValueError("history must be >= 0 or None")


@dataclass(frozen=True)
class Solution:
    beta_hat: np.ndarray
    iterations: int
    converged: bool
    objective_trace: np.ndarray
    distance_trace: Optional[np.ndarray] = None
    eta: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "beta_hat", _frozen(self.beta_hat))
        object.__setattr__(self, "objective_trace", _frozen(self.objective_trace))
        if self.distance_trace is not None:
            object.__setattr__(self, "distance_trace", _frozen(self.distance_trace))
