"""Gram-Schmidt forward regression for ultra-high-dimensional linear models."""

__version__ = "0.1.0"

from .data import Dataset, RawDataset, ingest_csv, standardize
from .errors import ConfigError, DataError, GsfrError, InvariantError
from .population import PopulationModel, pop_path, pop_scores
from .selection import (FR, GSFR, OGA, OlsFit, PathState, SelectionPath, SelectorConfig,
                        advance, compute_kn, gsfr_scores, oga_scores, predict, refit_ols,
                        run_path)
from .stopping import (StopConfig, StopDecision, delta_sequence, select_size,
                       select_size_bic, select_size_hdbic, select_size_ratio)

__all__ = [
    "Dataset", "RawDataset", "ingest_csv", "standardize",
    "ConfigError", "DataError", "GsfrError", "InvariantError",
    "PopulationModel", "pop_path", "pop_scores",
    "FR", "GSFR", "OGA", "OlsFit", "PathState", "SelectionPath", "SelectorConfig",
    "advance", "compute_kn", "gsfr_scores", "oga_scores", "predict", "refit_ols", "run_path",
    "StopConfig", "StopDecision", "delta_sequence", "select_size", "select_size_bic",
    "select_size_hdbic", "select_size_ratio",
]
