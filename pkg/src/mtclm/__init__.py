"""Multi-task cumulative logit model for joint screening and severity prediction."""

from .admm import fit, fit_fused, fit_group
from .data import (AdmmSettings, FitResult, MtclmParams, OrdinalDataset, PenaltyConfig,
                   ValidationError, read_csv, standardize, write_csv)
from .predict import predict_class, predict_proba, predict_screen

__version__ = "0.1.0"

__all__ = [
    "AdmmSettings", "FitResult", "MtclmParams", "OrdinalDataset", "PenaltyConfig",
    "ValidationError", "fit", "fit_fused", "fit_group", "predict_class", "predict_proba",
    "predict_screen", "read_csv", "standardize", "write_csv",
]
