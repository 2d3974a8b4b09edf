"""Lasso prediction under a joint latent factor model.

Library layout: ``model`` (generative model and oracle quantities),
``datagen`` (loadings, noise covariances, samples), ``solver`` (coordinate
descent paths and cross-validation), ``metrics`` (error functionals),
``theory`` (bounds and spectra) and ``harness`` (experiments and CLI).
"""

from .datagen import Dataset, ModelConfig, PsiSpec, build_psi, generate_loadings, illustrative_dataset, sample_dataset
from .metrics import ErrorReport, auc, estimation_errors, mse_in_sample, optimal_s, pe_out_sample
from .model import (LatentModelSpec, OracleQuantities, conditional_noise_variance, l1_norm_gamma0,
                    oracle_gamma0, oracle_quantities, population_covariance)
from .solver import (FitResult, PathResult, PenaltySpec, cross_validate, lasso_fit, lasso_path,
                     solution_at_s)
from .theory import (BoundInputs, SpectrumReport, empirical_spectrum, estimate_c0, fast_rate_bound,
                     fast_rate_lambda, partial_effective_rank, simple_bound)

__version__ = "0.1.0"

__all__ = [
    "BoundInputs", "Dataset", "ErrorReport", "FitResult", "LatentModelSpec", "ModelConfig",
    "OracleQuantities", "PathResult", "PenaltySpec", "PsiSpec", "SpectrumReport", "auc",
    "build_psi", "conditional_noise_variance", "cross_validate", "empirical_spectrum",
    "estimate_c0", "estimation_errors", "fast_rate_bound", "fast_rate_lambda",
    "generate_loadings", "illustrative_dataset", "l1_norm_gamma0", "lasso_fit", "lasso_path",
    "mse_in_sample", "optimal_s", "oracle_gamma0", "oracle_quantities", "partial_effective_rank",
    "pe_out_sample", "population_covariance", "sample_dataset", "simple_bound", "solution_at_s",
]
