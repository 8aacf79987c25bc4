"""Spatially-clustered spatial regression (SAR, SEM, SLX, OLS) with a Potts-type penalty."""

__version__ = "0.1.0"

from .concentration import GroupedDistribution, gini_grouped
from .data import Dataset
from .engine import ClusterAssignment, EngineConfig, FitResult, initialize, run, step_a, step_b
from .likelihood import (
    ClusterFit,
    Family,
    fit,
    fit_ols,
    fit_sar,
    fit_sem,
    fit_slx,
    loglik_sar,
    loglik_sem,
    lr_test,
    std_errors,
    unit_loglik,
)
from .selection import choose_elbow, grid_search
from .synthesis import ClusterParams, SyntheticSpec, generate, score_recovery
from .weights import (
    SpatialWeights,
    UnitIndexMap,
    lattice_weights,
    restrict,
    spectrum,
    weights_from_adjacency_list,
    weights_from_knn,
)

__all__ = [
    "ClusterAssignment",
    "ClusterFit",
    "ClusterParams",
    "Dataset",
    "EngineConfig",
    "Family",
    "FitResult",
    "GroupedDistribution",
    "SpatialWeights",
    "SyntheticSpec",
    "UnitIndexMap",
    "choose_elbow",
    "fit",
    "fit_ols",
    "fit_sar",
    "fit_sem",
    "fit_slx",
    "generate",
    "gini_grouped",
    "grid_search",
    "initialize",
    "lattice_weights",
    "loglik_sar",
    "loglik_sem",
    "lr_test",
    "restrict",
    "run",
    "score_recovery",
    "spectrum",
    "std_errors",
    "step_a",
    "step_b",
    "unit_loglik",
    "weights_from_adjacency_list",
    "weights_from_knn",
]
