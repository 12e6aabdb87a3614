"""Regression families for error sequences, their training and selection."""

from .families import ALL_FAMILIES, FAMILIES, NONRECURSIVE, NRT, RT, get_family
from .model import (RegressionModel, arx_raw_coefficients, check_mode, predict_batch,
                    predict_sequence, unroll)
from .nonparametric import (fit_nonparametric, gp_fit_predict, knn_fit_predict, knn_predict,
                            predict_dataset)
from .training import (TrainConfig, adam_step, compute_loss_and_gradients, default_grid,
                       default_mode, gp_lambda_grid, grid_search_select, init_moments,
                       train_model, validation_score)

__all__ = [
    "ALL_FAMILIES", "FAMILIES", "NONRECURSIVE", "NRT", "RT", "get_family",
    "RegressionModel", "arx_raw_coefficients", "check_mode", "predict_batch",
    "predict_sequence", "unroll", "fit_nonparametric", "gp_fit_predict", "knn_fit_predict",
    "knn_predict", "predict_dataset", "TrainConfig", "adam_step",
    "compute_loss_and_gradients", "default_grid", "default_mode", "gp_lambda_grid",
    "grid_search_select", "init_moments", "train_model", "validation_score",
]
