"""Evaluation of nonstationary (learning) policies by rejection sampling."""

from .drns import (
    DrnsState,
    ReplicatedRun,
    drns_replicates,
    drns_run,
    drns_run_with_state,
    nearest_rank_quantile,
    rs_run,
    wc_run,
)
from .progressive import (
    ProgressiveValidationPolicy,
    progressive_validation_bound,
    progressive_validation_policy,
)
from .theory import (
    ExactDrnsAnalysis,
    bias_mass_exact,
    drns_expectation_exact,
    failure_sample_requirement,
    theorem51_bound,
    tv_bound_check,
)

__all__ = [
    "DrnsState",
    "ExactDrnsAnalysis",
    "ProgressiveValidationPolicy",
    "ReplicatedRun",
    "bias_mass_exact",
    "drns_expectation_exact",
    "drns_replicates",
    "drns_run",
    "drns_run_with_state",
    "failure_sample_requirement",
    "nearest_rank_quantile",
    "progressive_validation_bound",
    "progressive_validation_policy",
    "rs_run",
    "theorem51_bound",
    "tv_bound_check",
    "wc_run",
]
