"""Fitness functions: partition-based ensemble learning and synthetic landscapes."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol

import numba
import numpy as np

from .genotype import FitnessKind, ProblemSpec

VALIDATION_SIZE = 500
TEST_SIZE = 500


class ParseError(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


class NoTrainingData(ValueError):
    pass


class BadBlockSize(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = ""
    num_classes: Optional[int] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.num_classes is None:
            self.num_classes = int(self.labels.max()) + 1 if len(self.labels) else 0
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.name, self.num_classes)


@dataclass(frozen=True)
class SplitSpec:
    train_size: int
    seed: int = 0
    validation_size: int = VALIDATION_SIZE
    test_size: int = TEST_SIZE


def read_dataset(path) -> Dataset:
    """Read a comma-separated table with a header row and an integer label last column."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise ParseError(f"{path}: expected a header and at least one data row")
    width = len(rows[0])
    if width < 2:
        raise ParseError(f"{path}: need at least one feature column and a label column")
    body = [r for r in rows[1:] if r]
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric value ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != width:
        raise ParseError(f"{path}: ragged rows, expected {width} columns")
    if not np.isfinite(data).all():
        raise ParseError(f"{path}: missing or non-finite values")
    raw_labels = data[:, -1]
    if not np.all(raw_labels == np.round(raw_labels)):
        raise ParseError(f"{path}: label column must hold integers")
    # dense re-indexing of class labels
    _, labels = np.unique(raw_labels.astype(np.int64), return_inverse=True)
    if labels.max() < 1:
        raise ParseError(f"{path}: need at least two classes")
    return Dataset(data[:, :-1], labels.reshape(-1), path.stem)


def minmax_scale(features: np.ndarray) -> np.ndarray:
    lo = features.min(axis=0)
    span = features.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (features - lo) / safe, 0.0)


def split_dataset(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Scale features to [0, 1], shuffle, then carve validation, test and train."""
    needed = spec.validation_size + spec.test_size + spec.train_size
    if len(data) < needed:
        raise TooFewSamples(f"{data.name}: {len(data)} samples but the split needs {needed}")
    scaled = Dataset(minmax_scale(data.features), data.labels, data.name, data.num_classes)
    perm = np.random.default_rng(spec.seed).permutation(len(data))
    v, t = spec.validation_size, spec.test_size
    validation = scaled.subset(perm[:v])
    test = scaled.subset(perm[v : v + t])
    train = scaled.subset(perm[v + t : v + t + spec.train_size])
    return train, validation, test


def load_and_split(path, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    return split_dataset(read_dataset(path), spec)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def bundled_dataset_path(name: str = "synthetic_blobs") -> Path:
    return Path(str(resources.files("p3gomea") / "data" / f"{name}.csv"))


class Learner(Protocol):
    def fit(self, features: np.ndarray, labels: np.ndarray, num_classes: int): ...

    def predict_proba(self, model, features: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class LogisticModel:
    weights: Optional[np.ndarray]  # (d + 1, C); None for a single-class subset
    only_class: Optional[int]
    num_classes: int


class LogisticLearner:
    """Multinomial logistic regression by fixed-step full-batch gradient descent.

    Objective: mean cross-entropy + reg / (2 n) * ||W||^2 (bias unpenalized),
    zero-initialized, ``iterations`` steps of size ``step``.
    """

    def __init__(self, reg: float = 1.0, step: float = 0.5, iterations: int = 200):
        self.reg = reg
        self.step = step
        self.iterations = iterations

    def fit(self, features, labels, num_classes: int) -> LogisticModel:
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) == 0:
            raise NoTrainingData("learner needs at least one training sample")
        present = np.unique(labels)
        if len(present) == 1:
            return LogisticModel(None, int(present[0]), num_classes)

        n, d = features.shape
        X = np.hstack([features, np.ones((n, 1))])
        Y = np.zeros((n, num_classes))
        Y[np.arange(n), labels] = 1.0
        W = _gradient_descent(X, Y, float(self.reg), float(self.step), int(self.iterations))
        return LogisticModel(W, None, num_classes)

    def predict_proba(self, model: LogisticModel, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if model.weights is None:
            out = np.zeros((len(features), model.num_classes))
            out[:, model.only_class] = 1.0
            return out
        X = np.hstack([features, np.ones((len(features), 1))])
        return _softmax(X @ model.weights)


@numba.njit(cache=True)
def _gradient_descent(X, Y, reg, step, iterations):
    n, p = X.shape
    c = Y.shape[1]
    W = np.zeros((p, c))
    Z = np.empty((n, c))
    for _ in range(iterations):
        # Z <- softmax(X W) - Y
        for i in range(n):
            top = -np.inf
            for k in range(c):
                acc = 0.0
                for j in range(p):
                    acc += X[i, j] * W[j, k]
                Z[i, k] = acc
                if acc > top:
                    top = acc
            total = 0.0
            for k in range(c):
                Z[i, k] = np.exp(Z[i, k] - top)
                total += Z[i, k]
            for k in range(c):
                Z[i, k] = Z[i, k] / total - Y[i, k]
        for j in range(p):
            # the last column of X is the unpenalized bias
            decay = reg / n if j < p - 1 else 0.0
            for k in range(c):
                g = 0.0
                for i in range(n):
                    g += X[i, j] * Z[i, k]
                W[j, k] -= step * (g / n + decay * W[j, k])
    return W


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def default_learner_fit(features, labels, num_classes: Optional[int] = None) -> LogisticModel:
    labels = np.asarray(labels, dtype=np.int64)
    return LogisticLearner().fit(features, labels, num_classes or int(labels.max()) + 1)


def default_learner_predict_proba(model: LogisticModel, features) -> np.ndarray:
    return LogisticLearner().predict_proba(model, features)


def ensemble_proba(
    genes, train: Dataset, evaluation: Dataset, learner: Optional[Learner] = None
) -> np.ndarray:
    """Average class probabilities of one learner per non-empty subset."""
    learner = learner or LogisticLearner()
    genes = np.asarray(genes)
    if len(genes) != len(train):
        raise ValueError(f"genotype has {len(genes)} genes for {len(train)} training samples")
    total = np.zeros((len(evaluation), train.num_classes))
    models = 0
    labels, first = np.unique(genes, return_index=True)
    # first-occurrence order keeps the floating-point sum invariant to relabeling
    for k in labels[np.argsort(first)]:
        idx = np.flatnonzero(genes == k)
        model = learner.fit(train.features[idx], train.labels[idx], train.num_classes)
        total += learner.predict_proba(model, evaluation.features)
        models += 1
    if models == 0:
        raise NoTrainingData("every subset of the partition is empty")
    return total / models


def accuracy(proba: np.ndarray, labels: np.ndarray) -> float:
    # argmax takes the lowest class index on ties
    return float(np.mean(np.argmax(proba, axis=1) == labels))


def partition_fitness(genes, train: Dataset, validation: Dataset, learner: Optional[Learner] = None) -> float:
    return accuracy(ensemble_proba(genes, train, validation, learner), validation.labels)


class PartitionEnsembleProblem:
    """Callable fitness: validation accuracy of the ensemble a partition defines."""

    def __init__(self, train: Dataset, validation: Dataset, learner: Optional[Learner] = None):
        self.train = train
        self.validation = validation
        self.learner = learner or LogisticLearner()

    def __call__(self, genes) -> float:
        return partition_fitness(genes, self.train, self.validation, self.learner)

    def baseline(self, evaluation: Optional[Dataset] = None) -> float:
        """Accuracy of a single learner trained on every training sample."""
        evaluation = evaluation or self.validation
        model = self.learner.fit(self.train.features, self.train.labels, self.train.num_classes)
        return accuracy(self.learner.predict_proba(model, evaluation.features), evaluation.labels)


def trap_fitness(genes, block_size: int = 5) -> float:
    """Concatenated deceptive trap: k for an all-ones block, else k - 1 - ones."""
    genes = np.asarray(genes)
    if block_size < 1 or len(genes) % block_size:
        raise BadBlockSize(f"{len(genes)} genes cannot be split into blocks of {block_size}")
    ones = genes.reshape(-1, block_size).sum(axis=1)
    return float(np.where(ones == block_size, block_size, block_size - 1 - ones).sum())


def categorical_onemax_fitness(genes) -> float:
    return float(np.count_nonzero(np.asarray(genes) == 0))


class TrapProblem:
    def __init__(self, block_size: int = 5):
        self.block_size = block_size

    def __call__(self, genes) -> float:
        return trap_fitness(genes, self.block_size)


def make_fitness(spec: ProblemSpec, train: Optional[Dataset] = None, validation: Optional[Dataset] = None):
    if spec.fitness_kind is FitnessKind.TRAP:
        return TrapProblem(spec.fitness_config.get("block_size", 5))
    if spec.fitness_kind is FitnessKind.CATEGORICAL_ONEMAX:
        return categorical_onemax_fitness
    if train is None or validation is None:
        raise ValueError("partition problems need training and validation data")
    return PartitionEnsembleProblem(train, validation)


def optimum(spec: ProblemSpec) -> Optional[float]:
    """Known global optimum of synthetic problems, None otherwise."""
    if spec.fitness_kind in (FitnessKind.TRAP, FitnessKind.CATEGORICAL_ONEMAX):
        return float(spec.num_vars)
    return None


def make_synthetic_dataset(
    num_samples: int = 2000,
    num_features: int = 8,
    num_classes: int = 3,
    clusters_per_class: int = 3,
    spread: float = 0.9,
    label_noise: float = 0.1,
    seed: int = 0,
) -> Dataset:
    """Gaussian blobs, several per class, with a fraction of flipped labels."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 2.0, size=(num_classes * clusters_per_class, num_features))
    owner = np.repeat(np.arange(num_classes), clusters_per_class)
    which = rng.integers(0, len(centers), size=num_samples)
    features = centers[which] + rng.normal(0.0, spread, size=(num_samples, num_features))
    labels = owner[which].copy()
    flip = rng.random(num_samples) < label_noise
    labels[flip] = rng.integers(0, num_classes, size=int(flip.sum()))
    return Dataset(features, labels, "synthetic_blobs", num_classes)


def write_dataset(data: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(data.features.shape[1])] + ["label"])
        for row, label in zip(data.features, data.labels):
            writer.writerow([f"{v:.6f}" for v in row] + [int(label)])
