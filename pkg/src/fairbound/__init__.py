"""Accuracy ceilings under equalized odds, TV estimation, and exact oracles."""

__version__ = "0.1.0"

from .bounds import BoundCurve, BoundParams, bound_curve, effective_bound, eo_bound, unconstrained_bound
from .core import (
    EmptyCellError,
    FairboundError,
    GroupStatistics,
    LabeledDataset,
    Prediction,
    accuracy,
    compute_group_stats,
    delta_eo,
)
from .divergence import EstimatorConfig, TvEstimate, estimate_tv_variational, exact_tv_discrete
from .oracle import DiscreteJoint, RandomizedClassifier, exact_params, optimal_fair_accuracy, random_joint

__all__ = [
    "BoundCurve", "BoundParams", "DiscreteJoint", "EmptyCellError", "EstimatorConfig",
    "FairboundError", "GroupStatistics", "LabeledDataset", "Prediction", "RandomizedClassifier",
    "TvEstimate", "accuracy", "bound_curve", "compute_group_stats", "delta_eo", "effective_bound",
    "eo_bound", "estimate_tv_variational", "exact_params", "exact_tv_discrete",
    "optimal_fair_accuracy", "random_joint", "unconstrained_bound",
]
