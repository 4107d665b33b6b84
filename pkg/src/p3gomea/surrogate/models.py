"""Regressor factory, training and one-shot grid-search tuning."""

from __future__ import annotations

import itertools
import warnings

import numpy as np

from .base import ConstantModel, DegenerateData, TooFewSamples
from .forest import RandomForest
from .svr import SVR

REGRESSOR_KINDS = ("svr", "random_forest")

HYPER_GRIDS: dict[str, list[dict]] = {
    "svr": [{"kernel": k} for k in ("rbf", "sigmoid")],
    "random_forest": [
        {
            "num_trees": 10,
            "min_samples_split": split,
            "min_samples_leaf": leaf,
            "ratio_features": ratio,
        }
        for split, leaf, ratio in itertools.product((1, 3, 10), (1, 3, 10), (5 / 6, 1.0))
    ],
}

CV_FOLDS = 3


def hyper_grid(kind: str) -> list[dict]:
    try:
        return [dict(p) for p in HYPER_GRIDS[kind]]
    except KeyError:
        raise ValueError(f"unknown regressor kind {kind!r}; expected one of {REGRESSOR_KINDS}")


def make_regressor(kind: str, params: dict, seed: int = 0):
    if kind == "svr":
        return SVR(**params)
    if kind == "random_forest":
        return RandomForest(seed=seed, **params)
    raise ValueError(f"unknown regressor kind {kind!r}; expected one of {REGRESSOR_KINDS}")


def train_regressor(kind: str, params: dict, X, y, seed: int = 0, warn: bool = True):
    """Fit a regressor; identical targets give a constant model."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < 1:
        raise TooFewSamples("cannot train a surrogate without samples")
    if np.all(y == y[0]):
        if warn:
            warnings.warn("all training targets are identical", DegenerateData, stacklevel=2)
        return ConstantModel(y[0], X.shape[1])
    return make_regressor(kind, params, seed).fit(X, y)


def cv_folds(n: int, seed: int, k: int = CV_FOLDS) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, k)


def cross_validation_error(kind: str, params: dict, X, y, seed: int = 0) -> float:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    folds = cv_folds(len(y), seed)
    errors = []
    for held in folds:
        train = np.setdiff1d(np.arange(len(y)), held)
        model = train_regressor(kind, params, X[train], y[train], seed, warn=False)
        errors.append(np.mean((model.predict(X[held]) - y[held]) ** 2))
    return float(np.mean(errors))


def tune_hyperparameters(kind: str, X, y, seed: int = 0) -> tuple[dict, list[float]]:
    """Grid search by mean held-fold MSE over 3 seeded folds.

    Returns the best grid point (first in grid order on ties) and the score of
    every candidate, in grid order.
    """
    if len(y) < CV_FOLDS:
        raise TooFewSamples(f"3-fold tuning needs at least {CV_FOLDS} samples, got {len(y)}")
    grid = hyper_grid(kind)
    scores = [cross_validation_error(kind, params, X, y, seed) for params in grid]
    best = int(np.argmin(scores))  # first minimum wins
    return grid[best], scores
