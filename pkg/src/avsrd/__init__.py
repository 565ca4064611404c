"""Rate-distortion functions of arbitrarily varying sources.

All rates are in nats unless a function says otherwise.
"""

from ._accel import backend_name
from .approx import ApproxResult, GridSpec, RdCurve, approx_extremum, enumerate_grid, rd_curve
from .avs import (
    FeasibleSet,
    RuleFamily,
    StateModel,
    SubsourceEnsemble,
    build_set,
    decompose_into_rules,
    load_model,
    max_rule_distribution,
)
from .continuity import ContinuityContext, certified_gamma, sufficient_sample_size
from .estimator import EstimationExperiment, plugin_estimate, validate_bound
from .helpful import build_meta_source, helpful_full_lookahead_rd, helpful_one_step_bounds
from .lp import LinearProgram, l1_distance_to_set, solve
from .prob import Alphabet, DistortionMatrix, as_pmf, d_min, empirical_type, entropy, l1_distance
from .rd import binary_hamming_rd, rate_distortion, rate_distortion_shifted

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "ApproxResult",
    "ContinuityContext",
    "DistortionMatrix",
    "EstimationExperiment",
    "FeasibleSet",
    "GridSpec",
    "LinearProgram",
    "RdCurve",
    "RuleFamily",
    "StateModel",
    "SubsourceEnsemble",
    "approx_extremum",
    "as_pmf",
    "backend_name",
    "binary_hamming_rd",
    "build_meta_source",
    "build_set",
    "certified_gamma",
    "d_min",
    "decompose_into_rules",
    "empirical_type",
    "entropy",
    "enumerate_grid",
    "helpful_full_lookahead_rd",
    "helpful_one_step_bounds",
    "l1_distance",
    "l1_distance_to_set",
    "load_model",
    "max_rule_distribution",
    "plugin_estimate",
    "rate_distortion",
    "rate_distortion_shifted",
    "rd_curve",
    "solve",
    "sufficient_sample_size",
    "validate_bound",
]
