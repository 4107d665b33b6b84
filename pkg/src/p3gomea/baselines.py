"""Random search and random-restart first-improvement local search."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .genotype import (
    ProblemSpec,
    RunResult,
    Solution,
    TerminationSignal,
    check_running,
    close_run,
    open_run,
)


def random_search(
    spec: ProblemSpec,
    fitness_fn: Callable[[np.ndarray], float],
    budget: int,
    seed: int,
    run_id: int = 0,
    time_limit: Optional[float] = None,
    target: Optional[float] = None,
    record_timing: bool = False,
) -> RunResult:
    ledger, recorder = open_run(spec, fitness_fn, budget, run_id, seed, time_limit, target, record_timing)
    rng = np.random.default_rng(seed)
    try:
        while True:
            check_running(ledger)
            ledger.evaluate(Solution(spec.random_genotype(rng)))
    except TerminationSignal as exc:
        reason = exc.reason
    return close_run(ledger, recorder, reason)


def local_search(
    spec: ProblemSpec,
    fitness_fn: Callable[[np.ndarray], float],
    budget: int,
    seed: int,
    run_id: int = 0,
    time_limit: Optional[float] = None,
    target: Optional[float] = None,
    record_timing: bool = False,
    on_restart: Optional[Callable[[int, float, np.ndarray], object]] = None,
) -> RunResult:
    """Random-restart local search.

    Each sweep visits the variables in a fresh random order and tries every
    other value of a variable in ascending order, keeping a value as soon as it
    strictly improves the incumbent. Sweeps repeat until one makes no change,
    then the search restarts from a new random solution. ``on_restart`` gets
    (real evaluations used by the finished restart, its fitness, its genes).
    """
    ledger, recorder = open_run(spec, fitness_fn, budget, run_id, seed, time_limit, target, record_timing)
    rng = np.random.default_rng(seed)
    alphabet = np.arange(spec.alphabet_size)
    restarts = 0
    try:
        while True:
            check_running(ledger)
            evals_at_start = ledger.real_eval_count
            s = Solution(spec.random_genotype(rng))
            ledger.evaluate(s)
            restarts += 1
            improved = True
            while improved:
                improved = False
                for i in rng.permutation(spec.num_vars):
                    for value in alphabet[alphabet != s.genes[i]]:
                        neighbor = Solution(s.genes.copy())
                        neighbor.genes[i] = value
                        ledger.evaluate(neighbor)
                        if neighbor.fitness > s.fitness:
                            s = neighbor
                            improved = True
            if on_restart is not None:
                on_restart(ledger.real_eval_count - evals_at_start, s.fitness, s.genes.copy())
    except TerminationSignal as exc:
        reason = exc.reason
    return close_run(ledger, recorder, reason, restarts=restarts)
