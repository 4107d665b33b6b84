"""Encoding and shared errors for surrogate regressors."""

from __future__ import annotations

import numpy as np


class DimensionMismatch(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


class DegenerateData(UserWarning):
    """All training targets are identical; the model predicts that constant."""


def one_hot_encode(genes, alphabet_size: int) -> np.ndarray:
    """One-hot encode a genotype (1-d) or a batch of genotypes (2-d).

    Gene ``i`` with value ``v`` sets position ``i * alphabet_size + v``.
    """
    genes = np.asarray(genes, dtype=np.int64)
    if genes.ndim == 1:
        out = np.zeros(len(genes) * alphabet_size)
        out[np.arange(0, out.size, alphabet_size) + genes] = 1.0
        return out
    single = False
    batch = np.atleast_2d(genes)
    n, ell = batch.shape
    out = np.zeros((n, ell * alphabet_size))
    out[np.arange(n)[:, None], np.arange(ell) * alphabet_size + batch] = 1.0
    return out[0] if single else out


def one_hot_decode(encoded, alphabet_size: int) -> np.ndarray:
    encoded = np.asarray(encoded)
    return encoded.reshape(*encoded.shape[:-1], -1, alphabet_size).argmax(-1)


class ConstantModel:
    def __init__(self, value: float, n_features: int):
        self.value = float(value)
        self.n_features_ = n_features

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features_:
            raise DimensionMismatch(f"expected {self.n_features_} features, got {X.shape[1]}")
        return np.full(len(X), self.value)
