"""Correlated components analysis: components maximally correlated across repetitions."""

from ._version import __version__
from .covariance import (
    CovariancePair,
    ScatterSet,
    between_covariance_direct,
    covariance_pair,
    cross_covariance_blocks,
    scatter_set,
    total_covariance_fast,
    within_covariance,
)
from .data import (
    ComponentTensor,
    DataTensor,
    DegenerateColumnWarning,
    center_per_repetition,
    load_dataset,
    save_dataset,
    standardize_per_repetition,
)
from .eigensolve import GeneralizedEigenDecomposition, Regularization, generalized_eig, solve
from .errors import CorrCAError, DefinitenessError, DimensionError, RankError, ValidationError
from .kernel import KernelCorrCAModel, KernelSpec, fit_kernel, transform_kernel
from .linear import (
    CorrCAModel,
    fit,
    fit_lda_view,
    fit_pca_mean_baseline,
    forward_model,
    isc_of_components,
    isc_per_subject,
    isc_statistics,
    isc_to_snr,
    snr_to_isc,
    transform,
)
from .mcca import MCCAModel, fit_mcca, transform_mcca
from .serialize import load_model, save_model
from .significance import (
    SignificanceReport,
    circular_shift_surrogate,
    parametric_f_test,
    phase_scramble_surrogate,
    split_f_test,
    surrogate_test,
)
from .simulation import SimulationSpec, evaluate_recovery, generate, pink_noise, run_study

__all__ = [
    "__version__",
    "CovariancePair",
    "ScatterSet",
    "between_covariance_direct",
    "covariance_pair",
    "cross_covariance_blocks",
    "scatter_set",
    "total_covariance_fast",
    "within_covariance",
    "ComponentTensor",
    "DataTensor",
    "DegenerateColumnWarning",
    "center_per_repetition",
    "load_dataset",
    "save_dataset",
    "standardize_per_repetition",
    "CorrCAModel",
    "fit",
    "fit_lda_view",
    "fit_pca_mean_baseline",
    "forward_model",
    "isc_of_components",
    "isc_per_subject",
    "isc_statistics",
    "isc_to_snr",
    "snr_to_isc",
    "transform",
    "SignificanceReport",
    "circular_shift_surrogate",
    "parametric_f_test",
    "phase_scramble_surrogate",
    "split_f_test",
    "surrogate_test",
    "GeneralizedEigenDecomposition",
    "Regularization",
    "generalized_eig",
    "solve",
    "CorrCAError",
    "DefinitenessError",
    "DimensionError",
    "RankError",
    "ValidationError",
    "KernelCorrCAModel",
    "KernelSpec",
    "fit_kernel",
    "transform_kernel",
    "MCCAModel",
    "fit_mcca",
    "transform_mcca",
    "load_model",
    "save_model",
    "SimulationSpec",
    "evaluate_recovery",
    "generate",
    "pink_noise",
    "run_study",
]
