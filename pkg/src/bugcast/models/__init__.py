from .arima import ArimaFit, arima_fit_css
from .base import FittedModel, fit, predict
from .forest import Forest, Tree, rf_fit, tree_build
from .lstm import lstm_cell_step, lstm_fit
from .serialize import dumps_model, loads_model, model_from_dict, model_to_dict
from .spec import (
    DEFAULT_REFIT,
    FAMILIES,
    ArimaParams,
    ExpParams,
    ForecasterSpec,
    LstmParams,
    NaiveParams,
    RfParams,
    WmaParams,
)

__all__ = [
    "ArimaFit",
    "ArimaParams",
    "DEFAULT_REFIT",
    "ExpParams",
    "FAMILIES",
    "FittedModel",
    "Forest",
    "ForecasterSpec",
    "LstmParams",
    "NaiveParams",
    "RfParams",
    "Tree",
    "WmaParams",
    "arima_fit_css",
    "dumps_model",
    "fit",
    "loads_model",
    "lstm_cell_step",
    "lstm_fit",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "rf_fit",
    "tree_build",
]
