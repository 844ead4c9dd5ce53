from .config import DEFAULT_SUBPOPS, ExperimentConfig, load_config, parse_subpop
from .metrics import MetricsReport, compute_coverage, compute_mse, compute_psr
from .runner import run_experiment, school_cates

__all__ = [
    "DEFAULT_SUBPOPS",
    "ExperimentConfig",
    "MetricsReport",
    "compute_coverage",
    "compute_mse",
    "compute_psr",
    "load_config",
    "parse_subpop",
    "run_experiment",
    "school_cates",
]
