from .diagnostics import bulk_ess, diagnostics, rhat_rank_normalized
from .draws import PosteriorDraws
from .model import ModelData, ModelSpec, post_gpa_spec, prev_gpa_spec, prior_predictive
from .predictive import CellPredictive, predictive_post, predictive_prev
from .sampler import fit

__all__ = [
    "CellPredictive",
    "ModelData",
    "ModelSpec",
    "PosteriorDraws",
    "bulk_ess",
    "diagnostics",
    "fit",
    "post_gpa_spec",
    "predictive_post",
    "predictive_prev",
    "prev_gpa_spec",
    "prior_predictive",
    "rhat_rank_normalized",
]
