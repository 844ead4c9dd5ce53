"""Simulation laboratory for poststratified treatment-effect estimation.

Builds a finite population of students nested in schools, draws a
stratified cluster sample with school- and student-level nonresponse,
randomizes treatment, and compares regression and model-based
poststratification estimators against closed-form truth.
"""

from .coefficients import Coefficients
from .dgp import (
    FinitePopulation,
    StrataLayout,
    assign_treatment,
    build_strata,
    generate_population,
    sample_truncnorm,
)
from .design import DesignConfig, ObservedSample, draw_sample
from .estimators import EstimateResult, estimate_all, impute_vhat, mrp_i, mrp_mi
from .kernels import BACKEND
from .oracle import cell_truth, g_formula, truncnorm_mean
from .poststrat import (
    PoststratMatrix,
    build_poststrat_matrix,
    in_sample_bias,
    poststratify_draws,
    poststratify_point,
    subpop_index,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Coefficients",
    "DesignConfig",
    "EstimateResult",
    "FinitePopulation",
    "ObservedSample",
    "PoststratMatrix",
    "StrataLayout",
    "assign_treatment",
    "build_poststrat_matrix",
    "build_strata",
    "cell_truth",
    "draw_sample",
    "estimate_all",
    "g_formula",
    "generate_population",
    "impute_vhat",
    "in_sample_bias",
    "mrp_i",
    "mrp_mi",
    "poststratify_draws",
    "poststratify_point",
    "sample_truncnorm",
    "subpop_index",
    "truncnorm_mean",
]
