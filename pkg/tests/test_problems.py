import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from p3gomea.genotype import ProblemSpec
from p3gomea.problems import (
    BadBlockSize,
    Dataset,
    LogisticLearner,
    ParseError,
    PartitionEnsembleProblem,
    SplitSpec,
    TooFewSamples,
    bundled_dataset_path,
    categorical_onemax_fitness,
    default_learner_fit,
    default_learner_predict_proba,
    ensemble_proba,
    load_and_split,
    make_fitness,
    make_synthetic_dataset,
    minmax_scale,
    optimum,
    partition_fitness,
    read_dataset,
    split_dataset,
    trap_fitness,
    write_dataset,
)


@pytest.fixture(scope="module")
def blobs():
    return read_dataset(bundled_dataset_path())


@pytest.fixture(scope="module")
def small_split(blobs):
    train, validation, _ = split_dataset(blobs, SplitSpec(40, seed=3))
    return train, validation


def test_trap_examples():
    assert trap_fitness([1] * 5) == 5
    assert trap_fitness([0] * 5) == 4
    assert trap_fitness([1] * 5 + [0] * 5) == 9
    with pytest.raises(BadBlockSize):
        trap_fitness([0] * 7, 5)


def test_trap_block_table():
    # value by number of ones u: k if u == k else k - 1 - u
    for u, value in enumerate([4, 3, 2, 1, 0, 5]):
        assert trap_fitness([1] * u + [0] * (5 - u)) == value


@given(st.lists(st.integers(0, 1), min_size=10, max_size=10))
def test_trap_optimum(genes):
    assert trap_fitness(genes) <= trap_fitness([1] * 10) == 10
    assert optimum(ProblemSpec(10, 2, "trap")) == 10


def test_onemax_examples():
    assert categorical_onemax_fitness([0] * 7) == 7
    assert categorical_onemax_fitness([1, 2, 3]) == 0
    assert categorical_onemax_fitness([0, 1, 0, 2]) == 2


def test_minmax_scale():
    X = np.array([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]])
    assert minmax_scale(X).tolist() == [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]


def test_split_sizes_and_disjointness():
    data = make_synthetic_dataset(num_samples=2310, seed=1)
    data.features[:, 0] = np.arange(len(data))  # unique row ids survive scaling
    train, validation, test = split_dataset(data, SplitSpec(250, seed=0))
    assert (len(train), len(validation), len(test)) == (250, 500, 500)
    ids = [set(np.round(d.features[:, 0] * 2309).astype(int)) for d in (train, validation, test)]
    assert not ids[0] & ids[1] and not ids[0] & ids[2] and not ids[1] & ids[2]


def test_split_too_small():
    with pytest.raises(TooFewSamples):
        split_dataset(make_synthetic_dataset(num_samples=1100), SplitSpec(101))


def test_read_dataset_roundtrip_and_relabel(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,label\n1,2,5\n3,4,9\n5,6,5\n")
    data = read_dataset(path)
    assert data.labels.tolist() == [0, 1, 0] and data.num_classes == 2
    assert data.features.tolist() == [[1, 2], [3, 4], [5, 6]]


@pytest.mark.parametrize(
    "text",
    ["a,label\n", "a,label\n1,x\n2,1\n", "a,label\n1,0.5\n2,1\n", "a,b,label\n1,0\n2,3,1\n", "a,label\n1,0\n2,0\n"],
)
def test_read_dataset_errors(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError):
        read_dataset(path)


def test_write_dataset_roundtrip(tmp_path):
    data = make_synthetic_dataset(num_samples=50, seed=2)
    write_dataset(data, tmp_path / "s.csv")
    back = read_dataset(tmp_path / "s.csv")
    assert np.allclose(back.features, data.features, atol=1e-6)


def test_bundled_dataset(blobs):
    assert 1900 <= len(blobs) <= 2100 and blobs.num_classes >= 2


def test_single_class_short_circuit():
    model = default_learner_fit(np.random.default_rng(0).random((4, 3)), [2, 2, 2, 2], 4)
    proba = default_learner_predict_proba(model, np.random.default_rng(1).random((5, 3)))
    assert np.array_equal(proba, np.tile([0.0, 0.0, 1.0, 0.0], (5, 1)))


def test_separable_singletons():
    model = default_learner_fit(np.array([[0.0], [1.0]]), np.array([0, 1]))
    proba = default_learner_predict_proba(model, np.array([[0.0], [1.0]]))
    assert proba[0, 0] > 0.5 and proba[1, 1] > 0.5


def test_learner_deterministic_and_normalized(small_split):
    train, validation = small_split
    a = default_learner_fit(train.features, train.labels, train.num_classes)
    b = default_learner_fit(train.features, train.labels, train.num_classes)
    assert np.array_equal(a.weights, b.weights)
    proba = default_learner_predict_proba(a, validation.features)
    assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-9)


def test_learner_minimizes_regularized_objective():
    rng = np.random.default_rng(4)
    X, y = rng.random((30, 3)), rng.integers(0, 3, 30)
    learner = LogisticLearner()

    def objective(W):
        Z = np.hstack([X, np.ones((30, 1))]) @ W
        Z -= Z.max(axis=1, keepdims=True)
        logp = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
        return -logp[np.arange(30), y].mean() + learner.reg / (2 * 30) * (W[:-1] ** 2).sum()

    W = learner.fit(X, y, 3).weights
    assert objective(W) < objective(np.zeros_like(W))
    short = LogisticLearner(iterations=20).fit(X, y, 3).weights
    assert objective(W) <= objective(short)


class NearestCentroid:
    """Confidence exp(-distance) in the nearest seen class, the rest spread over other classes."""

    def fit(self, features, labels, num_classes):
        return {int(c): features[labels == c].mean(axis=0) for c in np.unique(labels)}, num_classes

    def predict_proba(self, model, features):
        centroids, num_classes = model
        classes = np.array(sorted(centroids))
        dist = np.stack([np.abs(features - centroids[c]).sum(axis=1) for c in classes], axis=1)
        near = dist.argmin(axis=1)
        conf = np.exp(-dist[np.arange(len(features)), near])
        out = np.tile(((1 - conf) / (num_classes - 1))[:, None], (1, num_classes))
        out[np.arange(len(features)), classes[near]] = conf
        return out


def test_toy_partition_with_custom_learner():
    train = Dataset(np.array([[0.0], [0.0], [1.0], [1.0]]), np.array([0, 0, 1, 1]))
    validation = Dataset(np.array([[0.0], [1.0]]), np.array([0, 1]))
    # at x=0: learner on {0,1} gives (1, 0), learner on {2,3} gives (1 - e^-1, e^-1);
    # the average (0.816, 0.184) picks class 0, and symmetrically class 1 at x=1
    proba = ensemble_proba([0, 0, 1, 1], train, validation, NearestCentroid())
    assert proba[0, 0] == pytest.approx(1 - np.exp(-1) / 2)
    assert partition_fitness([0, 0, 1, 1], train, validation, NearestCentroid()) == 1.0


def test_all_zeros_is_baseline(small_split):
    train, validation = small_split
    problem = PartitionEnsembleProblem(train, validation)
    assert problem(np.zeros(len(train), dtype=int)) == problem.baseline()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_fitness_label_permutation_invariant(small_split, seed):
    train, validation = small_split
    rng = np.random.default_rng(seed)
    genes = rng.integers(0, 4, len(train))
    relabeled = rng.permutation(4)[genes]
    a = ensemble_proba(genes, train, validation)
    b = ensemble_proba(relabeled, train, validation)
    assert np.array_equal(a, b)
    assert np.allclose(a.sum(axis=1), 1.0, atol=1e-9)
    assert 0.0 <= partition_fitness(genes, train, validation) <= 1.0


def test_make_fitness_dispatch(small_split):
    train, validation = small_split
    assert make_fitness(ProblemSpec(10, 2, "trap"))([1] * 10) == 10
    assert make_fitness(ProblemSpec(3, 3, "categorical_onemax"))([0, 1, 0]) == 2
    assert isinstance(make_fitness(ProblemSpec(40, 3, "partition_ensemble"), train, validation), PartitionEnsembleProblem)
    with pytest.raises(ValueError):
        make_fitness(ProblemSpec(40, 3, "partition_ensemble"))


def test_load_and_split(tmp_path):
    write_dataset(make_synthetic_dataset(num_samples=1200, seed=5), tmp_path / "x.csv")
    train, validation, test = load_and_split(tmp_path / "x.csv", SplitSpec(100, seed=1))
    assert len(train) == 100 and train.features.min() >= 0 and train.features.max() <= 1
