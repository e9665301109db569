"""Latent class analysis with swap-stepwise variable selection."""

__version__ = "0.1.0"

from .assoc import AssociationMatrix, association_screen
from .data import CategoricalDataset, DataError, VariableRoles, from_codes, load_csv
from .lca import FitConfig, FitFailure, LcaModel, best_lca_over_g, classify, fit_lca, max_identifiable_g
from .logreg import LogRegConfig, LogRegModel, fit_multinom, select_predictors
from .metrics import ari, ari_from_table
from .selector import SelectionTrace, SelectorConfig, bic_diff_variable, select_variables
from .simgen import ScenarioSpec, SimulatedData, generate, generate_scenario1, generate_scenario2

__all__ = [
    "AssociationMatrix", "CategoricalDataset", "DataError", "FitConfig", "FitFailure",
    "LcaModel", "LogRegConfig", "LogRegModel", "ScenarioSpec", "SelectionTrace",
    "SelectorConfig", "SimulatedData", "VariableRoles", "ari", "ari_from_table",
    "association_screen", "best_lca_over_g", "bic_diff_variable", "classify", "fit_lca",
    "fit_multinom", "from_codes", "generate", "generate_scenario1", "generate_scenario2",
    "load_csv", "max_identifiable_g", "select_predictors", "select_variables",
]
