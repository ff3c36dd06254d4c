"""Robust elastic net: trimmed-inner-product surrogates solved by projected
gradient descent over an l1 ball, plus a synthetic adversarial benchmark."""

from .datagen import GeneratorSpec, generate_dataset
from .evaluation import (
    REParameters,
    check_lower_re,
    convergence_diagnostic,
    l2_recovery_error,
    refine,
    support_recovery_count,
)
from .model import (
    CovarianceSpec,
    Dataset,
    GroundTruth,
    Solution,
    SolverConfig,
    StepPolicy,
    TrimmedSurrogates,
)
from .projection import project_l1_ball
from .solver import estimate_eta, gradient, objective, pgd_solve
from .trimming import build_surrogates, trimmed_inner_product

__all__ = [
    "CovarianceSpec", "Dataset", "GeneratorSpec", "GroundTruth", "REParameters", "Solution",
    "SolverConfig", "StepPolicy", "TrimmedSurrogates", "build_surrogates", "check_lower_re",
    "convergence_diagnostic", "estimate_eta", "generate_dataset", "gradient", "l2_recovery_error",
    "objective", "pgd_solve", "project_l1_ball", "refine", "support_recovery_count",
    "trimmed_inner_product",
]

__version__ = "0.1.0"
