import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from p3gomea.genotype import (
    BudgetExhausted,
    EvaluationLedger,
    FitnessError,
    ProblemSpec,
    SearchSpaceExhausted,
    Solution,
    TargetReached,
    TimeLimitExceeded,
    check_running,
    genotype_key,
    normalize_partition,
    open_run,
    parse_genotype_key,
    search_space_size,
)


def g(text):
    return np.array([int(c) for c in text])


@pytest.mark.parametrize(
    "raw, expected",
    [("112200", "001122"), ("000", "000"), ("2102", "0120")],
)
def test_normalize_examples(raw, expected):
    assert "".join(map(str, normalize_partition(g(raw)))) == expected


def test_normalize_leaves_input_untouched():
    genes = g("112200")
    normalize_partition(genes)
    assert genotype_key(genes) == "1,1,2,2,0,0"


genotypes = st.lists(st.integers(0, 11), min_size=1, max_size=40).map(np.array)


@given(genotypes, st.randoms(use_true_random=False))
def test_normalize_label_permutation_invariant(genes, rnd):
    perm = list(range(12))
    rnd.shuffle(perm)
    relabeled = np.array(perm)[genes]
    assert np.array_equal(normalize_partition(genes), normalize_partition(relabeled))


@given(genotypes)
def test_normalize_idempotent_and_canonical(genes):
    n = normalize_partition(genes)
    assert np.array_equal(normalize_partition(n), n)
    # labels appear in order 0, 1, 2, ... by first occurrence
    firsts = [v for i, v in enumerate(n) if v not in n[:i]]
    assert firsts == list(range(len(firsts)))


@given(genotypes)
def test_key_roundtrip(genes):
    assert np.array_equal(parse_genotype_key(genotype_key(genes)), genes)


def test_key_unambiguous_for_large_alphabets():
    assert genotype_key([1, 12]) != genotype_key([11, 2])


def counting(fn=lambda genes: float(np.sum(genes))):
    calls = []

    def f(genes):
        calls.append(tuple(genes))
        return fn(genes)

    return f, calls


def test_ledger_partition_cache_hit():
    f, calls = counting()
    ledger = EvaluationLedger(f, budget=10, normalize=True)
    a = ledger.evaluate(Solution(g("1100")))
    b = ledger.evaluate(Solution(g("0011")))
    assert a == b and ledger.real_eval_count == 1 and len(calls) == 1


def test_ledger_distinct_partitions():
    f, _ = counting()
    ledger = EvaluationLedger(f, budget=10, normalize=True)
    ledger.evaluate(Solution(g("0011")))
    ledger.evaluate(Solution(g("0101")))
    assert ledger.real_eval_count == 2


def test_ledger_budget_and_free_hits():
    f, _ = counting()
    ledger = EvaluationLedger(f, budget=1)
    ledger.evaluate(Solution(g("01")))
    with pytest.raises(BudgetExhausted):
        ledger.evaluate(Solution(g("10")))
    # a hit is still allowed once the budget is spent
    s = Solution(g("01"))
    ledger.evaluate(s)
    assert s.real_fitness_calculated and ledger.real_eval_count == 1


def test_synthetic_problems_do_not_normalize():
    f, _ = counting()
    ledger = EvaluationLedger(f, budget=10, normalize=False)
    ledger.evaluate(Solution(g("1100")))
    ledger.evaluate(Solution(g("0011")))
    assert ledger.real_eval_count == 2
    assert not ProblemSpec(10, 2, "trap").normalizes
    assert ProblemSpec(10, 3, "partition_ensemble").normalizes


def test_elitist_strict_improvement_only():
    seen = []
    ledger = EvaluationLedger(lambda genes: 1.0, budget=5, on_elitist_improved=lambda *a: seen.append(a))
    ledger.evaluate(Solution(g("01")))
    ledger.evaluate(Solution(g("10")))
    assert genotype_key(ledger.elitist.genes) == "0,1"
    assert seen == [(1, 1.0, "0,1")]


def test_nan_is_an_error_and_not_cached():
    ledger = EvaluationLedger(lambda genes: math.nan, budget=5)
    with pytest.raises(FitnessError):
        ledger.evaluate(Solution(g("01")))
    assert ledger.real_eval_count == 0 and not ledger.cache


def test_time_limit():
    now = [0.0]
    ledger = EvaluationLedger(lambda genes: 1.0, budget=5, time_limit=1.0, clock=lambda: now[0])
    ledger.evaluate(Solution(g("01")))
    now[0] = 2.0
    with pytest.raises(TimeLimitExceeded):
        ledger.evaluate(Solution(g("01")))


def test_target_reached():
    ledger = EvaluationLedger(lambda genes: float(genes.sum()), budget=5, target=2.0)
    ledger.evaluate(Solution(g("10")))
    with pytest.raises(TargetReached):
        ledger.evaluate(Solution(g("11")))


@pytest.mark.parametrize("ell, alpha, expected", [(3, 2, 4), (4, 3, 14), (5, 5, 52)])
def test_search_space_size_partitions(ell, alpha, expected):
    # sums of Stirling numbers of the second kind (Bell numbers when alpha >= ell)
    assert search_space_size(ProblemSpec(ell, alpha, "partition_ensemble")) == expected


def test_space_exhaustion_is_detected():
    spec = ProblemSpec(2, 2, "categorical_onemax")
    ledger, _ = open_run(spec, lambda genes: 0.0, budget=10)
    for text in ("00", "01", "10", "11"):
        ledger.evaluate(Solution(g(text)))
    with pytest.raises(SearchSpaceExhausted):
        check_running(ledger)


@settings(max_examples=50)
@given(st.lists(st.lists(st.integers(0, 3), min_size=5, max_size=5), min_size=1, max_size=60), st.integers(1, 30))
def test_ledger_invariants(batch, budget):
    spec = ProblemSpec(5, 4, "partition_ensemble")
    ledger, recorder = open_run(spec, lambda genes: float(len(set(genes.tolist()))), budget)
    keys, best = set(), []
    for genes in batch:
        try:
            ledger.evaluate(Solution(np.array(genes)))
        except BudgetExhausted:
            continue
        keys.add(tuple(normalize_partition(genes)))
        best.append(ledger.elitist.fitness)
    assert ledger.real_eval_count == len(keys) <= budget
    assert best == sorted(best)
    fits = [r.elitist_fitness for r in recorder.rows]
    assert fits == sorted(set(fits))


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(12, 2, "trap", {"block_size": 5})
    with pytest.raises(ValueError):
        ProblemSpec(10, 3, "trap")
    with pytest.raises(ValueError):
        ProblemSpec(0, 2, "categorical_onemax")
    spec = ProblemSpec(4, 3, "categorical_onemax")
    with pytest.raises(ValueError):
        spec.validate([0, 1, 3, 0])
