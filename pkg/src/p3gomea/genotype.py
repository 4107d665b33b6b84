"""Solution representation, partition normalization and the evaluation ledger."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numba
import numpy as np


class TerminationSignal(Exception):
    """Base class for the conditions that end a search run."""

    reason = "terminated"


class BudgetExhausted(TerminationSignal):
    reason = "budget"


class TimeLimitExceeded(TerminationSignal):
    reason = "time_limit"


class TargetReached(TerminationSignal):
    reason = "target"


class FitnessError(ValueError):
    pass


class FitnessKind(str, enum.Enum):
    PARTITION_ENSEMBLE = "partition_ensemble"
    TRAP = "trap"
    CATEGORICAL_ONEMAX = "categorical_onemax"


@dataclass
class ProblemSpec:
    num_vars: int
    alphabet_size: int
    fitness_kind: FitnessKind = FitnessKind.TRAP
    fitness_config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.fitness_kind = FitnessKind(self.fitness_kind)
        if self.num_vars < 1:
            raise ValueError(f"num_vars must be >= 1, got {self.num_vars}")
        if self.alphabet_size < 2:
            raise ValueError(f"alphabet_size must be >= 2, got {self.alphabet_size}")
        if self.fitness_kind is FitnessKind.TRAP:
            k = self.fitness_config.get("block_size", 5)
            if self.alphabet_size != 2:
                raise ValueError("trap problems are binary (alphabet_size = 2)")
            if k < 1 or self.num_vars % k:
                raise ValueError(f"num_vars={self.num_vars} is not divisible by block size {k}")

    @property
    def normalizes(self) -> bool:
        # Only partition genotypes are invariant to relabeling.
        return self.fitness_kind is FitnessKind.PARTITION_ENSEMBLE

    def random_genotype(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.alphabet_size, size=self.num_vars, dtype=np.int64)

    def validate(self, genes) -> np.ndarray:
        genes = np.asarray(genes, dtype=np.int64)
        if genes.shape != (self.num_vars,):
            raise ValueError(f"expected {self.num_vars} genes, got shape {genes.shape}")
        if genes.min() < 0 or genes.max() >= self.alphabet_size:
            raise ValueError(f"gene values must lie in [0, {self.alphabet_size - 1}]")
        return genes


@dataclass
class Solution:
    """A genotype with its (optional) real and surrogate fitness values."""

    genes: np.ndarray
    fitness: Optional[float] = None
    surrogate_fitness: Optional[float] = None

    @property
    def real_fitness_calculated(self) -> bool:
        return self.fitness is not None

    def copy(self) -> "Solution":
        return Solution(self.genes.copy(), self.fitness, self.surrogate_fitness)

    def clear_fitness(self) -> None:
        self.fitness = None
        self.surrogate_fitness = None


def normalize_partition(genes) -> np.ndarray:
    """Relabel gene values in order of first occurrence.

    Two genotypes that describe the same partition of the variable indices map
    to the same array, e.g. ``112200 -> 001122``. The input is not modified.
    """
    genes = np.asarray(genes, dtype=np.int64)
    if len(genes) == 0:
        return genes.copy()
    return _relabel(genes, int(genes.max()) + 1)


@numba.njit(cache=True)
def _relabel(genes, num_labels):
    mapping = np.full(num_labels, -1, dtype=np.int64)
    out = np.empty_like(genes)
    nxt = 0
    for i in range(len(genes)):
        g = genes[i]
        if mapping[g] < 0:
            mapping[g] = nxt
            nxt += 1
        out[i] = mapping[g]
    return out


def genotype_key(genes) -> str:
    return ",".join(str(int(g)) for g in genes)


def parse_genotype_key(key: str) -> np.ndarray:
    if not key:
        return np.zeros(0, dtype=np.int64)
    return np.array([int(v) for v in key.split(",")], dtype=np.int64)


@dataclass(frozen=True)
class TrajectoryRecord:
    run_id: int
    seed: int
    real_evals: int
    elapsed_ms: int
    elitist_fitness: float
    elitist_genotype: str


class EvaluationLedger:
    """Cache-aware counter of real fitness evaluations for a single run.

    Every distinct (normalized) genotype is evaluated and charged at most once.
    Cache hits are free and remain available after the budget is spent.
    """

    def __init__(
        self,
        fitness_fn: Callable[[np.ndarray], float],
        budget: int,
        normalize: bool = False,
        time_limit: Optional[float] = None,
        target: Optional[float] = None,
        on_elitist_improved: Optional[Callable[[int, float, str], Any]] = None,
        clock: Callable[[], float] = time.perf_counter,
    ):
        if budget < 0:
            raise ValueError("budget must be non-negative")
        self.fitness_fn = fitness_fn
        self.budget = budget
        self.normalize = normalize
        self.time_limit = time_limit
        self.target = target
        self.on_elitist_improved = on_elitist_improved
        self.cache: dict[bytes, float] = {}
        self.real_eval_count = 0
        self.elitist: Optional[Solution] = None
        self.space_size: float = math.inf
        self._clock = clock
        self._start = clock()

    @property
    def elapsed(self) -> float:
        return self._clock() - self._start

    @property
    def exhausted(self) -> bool:
        return self.real_eval_count >= self.budget

    def key(self, genes) -> str:
        """Serialized (normalized) genotype, as written to trajectory files."""
        if self.normalize:
            genes = normalize_partition(genes)
        return genotype_key(genes)

    def cache_key(self, genes) -> bytes:
        genes = np.asarray(genes, dtype=np.int64)
        if self.normalize:
            genes = normalize_partition(genes)
        return genes.tobytes()

    def lookup(self, genes) -> Optional[float]:
        return self.cache.get(self.cache_key(genes))

    def check_time(self) -> None:
        if self.time_limit is not None and self.elapsed > self.time_limit:
            raise TimeLimitExceeded(f"wall-clock limit of {self.time_limit}s passed")

    def evaluate(self, solution: Solution) -> float:
        """Attach the real fitness to ``solution`` and return it."""
        self.check_time()
        key = self.cache_key(solution.genes)
        value = self.cache.get(key)
        if value is None:
            if self.real_eval_count >= self.budget:
                raise BudgetExhausted(f"budget of {self.budget} real evaluations spent")
            value = float(self.fitness_fn(solution.genes))
            if math.isnan(value):
                raise FitnessError(f"fitness function returned NaN for {self.key(solution.genes)}")
            self.cache[key] = value
            self.real_eval_count += 1
        solution.fitness = value
        self._offer_elitist(solution)
        return value

    def _offer_elitist(self, solution: Solution) -> None:
        if self.elitist is not None and not solution.fitness > self.elitist.fitness:
            return
        self.elitist = Solution(solution.genes.copy(), solution.fitness)
        if self.on_elitist_improved is not None:
            self.on_elitist_improved(self.real_eval_count, solution.fitness, self.key(solution.genes))
        if self.target is not None and solution.fitness >= self.target:
            raise TargetReached(f"target fitness {self.target} reached")


class TrajectoryRecorder:
    """Collects trajectory rows from ledger callbacks."""

    def __init__(self, run_id: int = 0, seed: int = 0, record_timing: bool = False):
        self.run_id = run_id
        self.seed = seed
        self.record_timing = record_timing
        self.rows: list[TrajectoryRecord] = []
        self.ledger: Optional[EvaluationLedger] = None

    def attach(self, ledger: EvaluationLedger) -> EvaluationLedger:
        self.ledger = ledger
        ledger.on_elitist_improved = self.on_elitist_improved
        return ledger

    def _elapsed_ms(self) -> int:
        if not self.record_timing or self.ledger is None:
            return 0
        return int(round(self.ledger.elapsed * 1000))

    def on_elitist_improved(self, real_evals: int, fitness: float, key: str) -> None:
        self.rows.append(
            TrajectoryRecord(self.run_id, self.seed, real_evals, self._elapsed_ms(), fitness, key)
        )

    def on_termination(self, reason: str) -> None:
        ledger = self.ledger
        if ledger is None or ledger.elitist is None:
            return
        self.rows.append(
            TrajectoryRecord(
                self.run_id,
                self.seed,
                ledger.real_eval_count,
                self._elapsed_ms(),
                ledger.elitist.fitness,
                ledger.key(ledger.elitist.genes),
            )
        )


def search_space_size(spec: ProblemSpec) -> int:
    """Number of distinct ledger keys: alpha^l, or partitions into <= alpha blocks."""
    ell, alpha = spec.num_vars, spec.alphabet_size
    if not spec.normalizes:
        return alpha**ell
    # Stirling numbers of the second kind, S(n, k) for k <= alpha
    row = [1] + [0] * alpha
    for _ in range(ell):
        new = [0] * (alpha + 1)
        for k in range(1, alpha + 1):
            new[k] = k * row[k] + row[k - 1]
        row = new
    return sum(row[1:])


@dataclass
class RunResult:
    trajectory: list[TrajectoryRecord]
    termination_reason: str
    real_evals: int
    elitist: Optional[Solution]
    info: dict = field(default_factory=dict)


class SearchSpaceExhausted(TerminationSignal):
    reason = "space_exhausted"


def open_run(
    spec: ProblemSpec,
    fitness_fn: Callable[[np.ndarray], float],
    budget: int,
    run_id: int = 0,
    seed: int = 0,
    time_limit: Optional[float] = None,
    target: Optional[float] = None,
    record_timing: bool = False,
) -> tuple[EvaluationLedger, TrajectoryRecorder]:
    recorder = TrajectoryRecorder(run_id, seed, record_timing)
    ledger = EvaluationLedger(fitness_fn, budget, spec.normalizes, time_limit, target)
    ledger.space_size = search_space_size(spec)
    recorder.attach(ledger)
    return ledger, recorder


def check_running(ledger: EvaluationLedger) -> None:
    """Raise the matching termination signal when a run cannot make progress."""
    ledger.check_time()
    if ledger.exhausted:
        raise BudgetExhausted(f"budget of {ledger.budget} real evaluations spent")
    if len(ledger.cache) >= ledger.space_size:
        raise SearchSpaceExhausted("every genotype has been evaluated")


def close_run(ledger: EvaluationLedger, recorder: TrajectoryRecorder, reason: str, **info) -> RunResult:
    recorder.on_termination(reason)
    return RunResult(
        recorder.rows,
        reason,
        ledger.real_eval_count,
        ledger.elitist.copy() if ledger.elitist is not None else None,
        info,
    )
