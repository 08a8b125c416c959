"""Fully discrete samples of the stochastic heat equation on [0, 1]."""

from .model import (
    DEFAULT_PARAMETERS,
    Grid,
    InitialCondition,
    ModeIndexSets,
    Parameters,
    aliased_sign_and_index,
    eigenfunction,
    eigenvalue,
    empirical_inner_product,
    validate_theta,
)
from .ou import CoefficientPath, ou_initial_draw, ou_path
from .samplers import (
    ReplacementConfig,
    SampleField,
    TruncationConfig,
    rho,
    sample_replacement,
    sample_truncation,
    tail_variance_closed,
    tail_variance_series,
)
from .oracle import (
    exact_sample,
    mode_covariance_replacement,
    mode_covariance_true,
    tv_frobenius_bound,
)
from .stats import (
    clt_constant_B,
    normalize_spatial,
    normalize_temporal,
    qv_spatial,
    qv_temporal,
    theorem2_diagnostic,
    truncation_bias_prediction,
)
from .harness import ExperimentConfig, ExperimentReport, emit_field, read_field, run_experiment

__version__ = "0.1.0"
