import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from p3gomea.baselines import local_search, random_search
from p3gomea.genotype import ProblemSpec
from p3gomea.problems import TrapProblem, categorical_onemax_fitness


def test_random_search_exhausts_tiny_space():
    spec = ProblemSpec(1, 2, "categorical_onemax")
    result = random_search(spec, categorical_onemax_fitness, budget=2, seed=0)
    assert result.real_evals == 2 and result.elitist.fitness == 1.0


def test_random_search_zero_budget():
    spec = ProblemSpec(5, 2, "categorical_onemax")
    result = random_search(spec, categorical_onemax_fitness, budget=0, seed=0)
    assert result.trajectory == [] and result.elitist is None


def test_random_search_deterministic():
    spec = ProblemSpec(8, 3, "categorical_onemax")
    seen = [[], []]
    for k in range(2):
        record = lambda genes, k=k: seen[k].append(genes.tolist()) or categorical_onemax_fitness(genes)
        random_search(spec, record, budget=30, seed=9)
    assert seen[0] == seen[1] and len(seen[0]) == 30


def test_local_search_onemax_first_restart_bound():
    spec = ProblemSpec(5, 3, "categorical_onemax")
    restarts = []
    local_search(spec, categorical_onemax_fitness, 200, seed=0, on_restart=lambda *a: restarts.append(a))
    used, fitness, genes = restarts[0]
    assert fitness == 5.0 and genes.tolist() == [0] * 5
    assert used <= 1 + 2 * 5 * 2


@pytest.mark.parametrize("alpha", [2, 3])
def test_local_search_start_at_optimum_sweeps_once(alpha):
    # flat landscape: every start is optimal, so one non-improving sweep then a restart;
    # each variable is tried with its alpha - 1 alternative values
    spec = ProblemSpec(30, alpha, "categorical_onemax")
    restarts = []
    local_search(spec, lambda genes: 1.0, 200, seed=1, on_restart=lambda *a: restarts.append(a))
    assert restarts[0][0] == 1 + 30 * (alpha - 1)


@pytest.mark.parametrize("alpha", [2, 4])
def test_neighbors_differ_in_one_variable(alpha):
    spec = ProblemSpec(6, alpha, "categorical_onemax")
    tried = []
    restarts = []

    def f(genes):
        tried.append(genes.copy())
        return categorical_onemax_fitness(genes)

    local_search(spec, f, 60, seed=2, on_restart=lambda *a: restarts.append(a))
    used = restarts[0][0]
    incumbent = tried[0]
    for genes in tried[1:used]:
        assert np.sum(genes != incumbent) == 1
        if categorical_onemax_fitness(genes) > categorical_onemax_fitness(incumbent):
            incumbent = genes
    assert categorical_onemax_fitness(incumbent) == 6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_local_search_onemax_bound_property(seed):
    spec = ProblemSpec(10, 4, "categorical_onemax")
    restarts = []
    local_search(spec, categorical_onemax_fitness, 400, seed=seed, on_restart=lambda *a: restarts.append(a))
    assert restarts
    for used, fitness, _ in restarts:
        assert fitness == 10.0 and used <= 1 + 2 * 10 * 3


def test_local_search_deterministic_and_bounded():
    spec = ProblemSpec(15, 2, "trap", {"block_size": 5})
    a = local_search(spec, TrapProblem(5), 300, seed=3)
    b = local_search(spec, TrapProblem(5), 300, seed=3)
    assert a.trajectory == b.trajectory
    assert a.real_evals <= 300 and a.termination_reason == "budget"
    fits = [r.elitist_fitness for r in a.trajectory]
    assert fits == sorted(fits)
