"""Gene-pool optimal mixing and the mixed real/surrogate comparison."""

from __future__ import annotations

from typing import Callable, Sequence

import numba
import numpy as np

from .genotype import Solution, TerminationSignal


class MissingFitness(ValueError):
    pass


def _sign(a: float, b: float) -> int:
    if a > b:
        return 1
    if a == b:
        return 0
    return -1


def compare_solutions(x: Solution, y: Solution) -> int:
    """Compare by real fitness when both have it, otherwise by surrogate fitness."""
    if x.real_fitness_calculated and y.real_fitness_calculated:
        return _sign(x.fitness, y.fitness)
    if x.surrogate_fitness is None or y.surrogate_fitness is None:
        raise MissingFitness("surrogate fitness required when a real fitness is absent")
    return _sign(x.surrogate_fitness, y.surrogate_fitness)


def sort_fos(fos: Sequence[Sequence[int]], rng: np.random.Generator) -> list[np.ndarray]:
    """Ascending subset size; equal sizes in random order."""
    order = rng.permutation(len(fos))
    order = sorted(order, key=lambda i: len(fos[i]))
    return [np.asarray(fos[i], dtype=np.int64) for i in order]


@numba.njit(cache=True)
def _first_differing_donor(donors, order, subset, genes) -> int:
    for d in order:
        for i in subset:
            if donors[d, i] != genes[i]:
                return d
    return -1


def gom_improve(
    p: Solution,
    donors,
    fos: Sequence[Sequence[int]],
    evaluate: Callable[[Solution], object],
    rng: np.random.Generator,
) -> Solution:
    """Mix donor genes into a copy of ``p`` one FOS subset at a time.

    ``donors`` is an (n, l) array of donor genotypes (or a list of solutions).
    For each subset a random donor order is scanned for the first donor that
    differs on the subset; its genes are copied, the candidate is evaluated and
    kept unless it compares worse than the current solution. On termination the
    exception carries the last accepted solution as ``partial``.
    """
    if not isinstance(donors, np.ndarray):
        donors = np.array([d.genes if isinstance(d, Solution) else d for d in donors])
    donors = np.ascontiguousarray(donors, dtype=np.int64)
    if len(donors) == 0:
        raise ValueError("donor population is empty")

    o = p.copy()
    backup = p.copy()
    try:
        for subset in sort_fos(fos, rng):
            d = _first_differing_donor(donors, rng.permutation(len(donors)), subset, backup.genes)
            if d < 0:
                continue
            o.genes[subset] = donors[d, subset]
            o.clear_fitness()
            evaluate(o)
            if compare_solutions(o, backup) >= 0:
                backup = o.copy()
            else:
                o = backup.copy()
    except TerminationSignal as exc:
        exc.partial = backup
        raise
    return o
