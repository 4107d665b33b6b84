"""Surrogate fitness regressors over one-hot encoded genotypes."""

from .base import ConstantModel, DegenerateData, DimensionMismatch, TooFewSamples, one_hot_decode, one_hot_encode
from .forest import RandomForest, RegressionTree
from .models import (
    HYPER_GRIDS,
    REGRESSOR_KINDS,
    cross_validation_error,
    hyper_grid,
    make_regressor,
    train_regressor,
    tune_hyperparameters,
)
from .svr import SVR

__all__ = [
    "ConstantModel",
    "DegenerateData",
    "DimensionMismatch",
    "HYPER_GRIDS",
    "REGRESSOR_KINDS",
    "RandomForest",
    "RegressionTree",
    "SVR",
    "TooFewSamples",
    "cross_validation_error",
    "hyper_grid",
    "make_regressor",
    "one_hot_decode",
    "one_hot_encode",
    "train_regressor",
    "tune_hyperparameters",
]
