"""Random forest regressor with variance-reduction splits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .base import DimensionMismatch


@dataclass
class RegressionTree:
    """Binary tree stored in flat arrays; a leaf has ``feature == -1``."""

    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)

    def _add(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.value) - 1

    @property
    def node_count(self) -> int:
        return len(self.value)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        value = np.asarray(self.value)
        node = np.zeros(len(X), dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            f = feature[node[idx]]
            go_left = X[idx, f] <= threshold[node[idx]]
            node[idx] = np.where(go_left, left[node[idx]], right[node[idx]])
            active = feature[node] >= 0
        return value[node]


def _best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int):
    """Return (sse_reduction, feature, threshold) of the best split or None."""
    n = len(y)
    Xf = X[:, features]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)
    csq = np.cumsum(ys * ys, axis=0)
    total, total_sq = csum[-1], csq[-1]

    n_left = np.arange(1, n)[:, None].astype(float)
    n_right = n - n_left
    sse_left = csq[:-1] - csum[:-1] ** 2 / n_left
    sse_right = (total_sq - csq[:-1]) - (total - csum[:-1]) ** 2 / n_right
    parent = total_sq[0] - total[0] ** 2 / n
    gain = parent - (sse_left + sse_right)

    valid = xs[1:] > xs[:-1]  # only split between distinct values
    valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    pos, col = np.unravel_index(int(np.argmax(gain)), gain.shape)
    if not gain[pos, col] > 1e-12:
        return None
    thr = 0.5 * (xs[pos, col] + xs[pos + 1, col])
    return gain[pos, col], int(features[col]), float(thr)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    ratio_features: float = 1.0,
) -> RegressionTree:
    tree = RegressionTree()
    d = X.shape[1]
    n_try = max(1, int(round(ratio_features * d)))
    # min_samples_split below 2 places no constraint
    min_split = max(2, min_samples_split)

    root = tree._add(y.mean())
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        if len(idx) < min_split or len(idx) < 2 * min_samples_leaf:
            continue
        ys = y[idx]
        if np.all(ys == ys[0]):
            continue
        features = np.arange(d) if n_try >= d else np.sort(rng.choice(d, n_try, replace=False))
        split = _best_split(X[idx], ys, features, min_samples_leaf)
        if split is None:
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = tree._add(y[li].mean())
        tree.right[node] = tree._add(y[ri].mean())
        stack.append((tree.right[node], ri))
        stack.append((tree.left[node], li))
    return tree


class RandomForest:
    """Bootstrap-aggregated regression trees, predictions averaged over trees."""

    def __init__(
        self,
        num_trees: int = 10,
        min_samples_split: int = 2,
        min_samples_leaf: int = 1,
        ratio_features: float = 1.0,
        seed: int = 0,
        trees: Optional[list[RegressionTree]] = None,
        n_features: Optional[int] = None,
    ):
        self.num_trees = num_trees
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.ratio_features = ratio_features
        self.seed = seed
        self.trees_ = list(trees) if trees is not None else []
        self.n_features_ = n_features

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        rng = np.random.default_rng(self.seed)
        self.n_features_ = X.shape[1]
        self.trees_ = []
        for _ in range(self.num_trees):
            boot = rng.integers(0, len(y), size=len(y))
            self.trees_.append(
                grow_tree(
                    X[boot],
                    y[boot],
                    rng,
                    self.min_samples_split,
                    self.min_samples_leaf,
                    self.ratio_features,
                )
            )
        return self

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.n_features_ is not None and X.shape[1] != self.n_features_:
            raise DimensionMismatch(f"expected {self.n_features_} features, got {X.shape[1]}")
        return np.mean([tree.predict(X) for tree in self.trees_], axis=0)
