"""Minimal Learning Machine: distance regression with multilateration output recovery."""

from .core import Dataset, DistancePair, ReferenceSet, distance_matrix_det_sign, pairwise_distances
from .estimator import MLMRegressor, krel_to_k
from .prediction import (
    LlsDiagnostics,
    LlsSystem,
    build_lls,
    lls_diagnostics,
    multilateration_cost,
    predict,
    solve_lls,
)
from .training import MlmModel, fit, predict_output_distances

__version__ = "0.1.0"
