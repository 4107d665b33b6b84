"""P3-GOMEA and its surrogate-assisted variant."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .genotype import (
    EvaluationLedger,
    ProblemSpec,
    RunResult,
    Solution,
    TerminationSignal,
    check_running,
    close_run,
    open_run,
)
from .gom import compare_solutions, gom_improve
from .linkage import learn_fos
from .surrogate import one_hot_encode, train_regressor, tune_hyperparameters

log = logging.getLogger(__name__)

DEFAULT_ETA = 0.999


class ConfigError(ValueError):
    pass


class EmptyArchive(ValueError):
    pass


def set_threshold(F, lam: float) -> float:
    """The lambda-quantile of ``F``: element ``ceil(lam * |F|) - 1`` of the sorted values."""
    F = np.sort(np.asarray(F, dtype=float))
    if len(F) == 0:
        raise EmptyArchive("threshold needs at least one archived prediction")
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    idx = min(max(math.ceil(lam * len(F)) - 1, 0), len(F) - 1)
    return float(F[idx])


@dataclass
class SurrogateState:
    """Archive of really evaluated solutions, fitted regressor and gating controller."""

    kind: str
    alphabet_size: int
    eta: float = DEFAULT_ETA
    scale_targets: bool = False
    seed: int = 0
    hyperparameters: Optional[dict] = None
    lam: float = 1.0
    threshold: float = math.inf
    genes: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    predictions: np.ndarray = field(default_factory=lambda: np.zeros(0))
    model: object = None
    informative: bool = True
    _keys: set = field(default_factory=set)
    _trained_on: int = -1
    _target_range: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}")

    def add(self, genes, fitness: float) -> bool:
        key = np.asarray(genes, dtype=np.int64).tobytes()
        if key in self._keys:
            return False
        self._keys.add(key)
        self.genes.append(np.array(genes, dtype=np.int64))
        self.targets.append(float(fitness))
        return True

    def _encoded(self) -> np.ndarray:
        return one_hot_encode(np.array(self.genes), self.alphabet_size)

    def _scaled_targets(self) -> np.ndarray:
        y = np.asarray(self.targets)
        if not self.scale_targets:
            return y
        lo, hi = y.min(), y.max()
        self._target_range = (lo, hi)
        return (y - lo) / (hi - lo) if hi > lo else np.zeros_like(y)

    def tune(self) -> dict:
        if self.hyperparameters is None:
            self.hyperparameters, scores = tune_hyperparameters(
                self.kind, self._encoded(), self._scaled_targets(), self.seed
            )
            log.debug("tuned %s hyperparameters %s (cv scores %s)", self.kind, self.hyperparameters, scores)
        return self.hyperparameters

    def retrain(self) -> None:
        """Refit on the archive when it grew, then refresh predictions and threshold."""
        if len(self.genes) == 0:
            raise EmptyArchive("cannot train a surrogate on an empty archive")
        if self._trained_on != len(self.genes):
            X = self._encoded()
            self.model = train_regressor(
                self.kind, self.tune(), X, self._scaled_targets(), self.seed, warn=False
            )
            self.predictions = self.model.predict(X)
            self._trained_on = len(self.genes)
        self.threshold = set_threshold(self.predictions, self.lam)
        # A model that predicts one value for the whole archive (e.g. an SVR whose
        # epsilon-tube holds every target) can never put a candidate above the
        # threshold, which would stall the search without spending budget.
        self.informative = bool(np.ptp(self.predictions) > 0)

    def predict(self, genes) -> float:
        return float(self.model.predict(one_hot_encode(genes, self.alphabet_size)[None, :])[0])

    def relax(self) -> None:
        self.lam *= self.eta


def sa_evaluate(x: Solution, state: SurrogateState, ledger: EvaluationLedger) -> Solution:
    """Predict ``x``; spend a real evaluation only above the threshold or on a cache hit.

    An uninformative (constant) model opens the gate for every solution.
    """
    x.surrogate_fitness = state.predict(x.genes)
    gate = x.surrogate_fitness > state.threshold or not state.informative
    if gate or ledger.lookup(x.genes) is not None:
        before = ledger.elitist
        try:
            ledger.evaluate(x)
        finally:
            if x.real_fitness_calculated:
                state.add(x.genes, x.fitness)
                if ledger.elitist is not before:
                    state.lam = 1.0
    return x


class Level:
    """One pyramid layer; duplicate genotypes are not stored."""

    def __init__(self, num_vars: int):
        self.solutions: list[Solution] = []
        self._keys: set[bytes] = set()
        self._rows: list[np.ndarray] = []
        self._matrix = np.zeros((0, num_vars), dtype=np.int64)

    def __len__(self) -> int:
        return len(self.solutions)

    def __contains__(self, solution: Solution) -> bool:
        return solution.genes.tobytes() in self._keys

    def add(self, solution: Solution) -> bool:
        key = solution.genes.tobytes()
        if key in self._keys:
            return False
        self._keys.add(key)
        self.solutions.append(solution.copy())
        self._rows.append(solution.genes.copy())
        return True

    @property
    def genes(self) -> np.ndarray:
        if len(self._matrix) != len(self._rows):
            self._matrix = np.array(self._rows, dtype=np.int64)
        return self._matrix


class P3Gomea:
    """Parameterless population pyramid evolving one solution per iteration.

    Pass a :class:`SurrogateState` to run the surrogate-assisted variant.
    """

    def __init__(
        self,
        spec: ProblemSpec,
        ledger: EvaluationLedger,
        rng: np.random.Generator,
        surrogate: Optional[SurrogateState] = None,
    ):
        self.spec = spec
        self.ledger = ledger
        self.rng = rng
        self.surrogate = surrogate
        self.levels: list[Level] = [Level(spec.num_vars)]
        self.iterations = 0

    def evaluate(self, solution: Solution) -> Solution:
        if self.surrogate is None:
            self.ledger.evaluate(solution)
            return solution
        return sa_evaluate(solution, self.surrogate, self.ledger)

    def initialize_surrogate(self) -> None:
        """Really evaluate l distinct random solutions and fit the first model."""
        state, ledger, ell = self.surrogate, self.ledger, self.spec.num_vars
        seen: set[bytes] = set()
        attempts = 0
        while len(seen) < ell and attempts < 100 * ell:
            attempts += 1
            genes = self.spec.random_genotype(self.rng)
            key = ledger.cache_key(genes)
            if key in seen:
                continue
            seen.add(key)
            s = Solution(genes)
            ledger.evaluate(s)
            state.add(s.genes, s.fitness)
        state.lam = 1.0
        state.retrain()

    def iterate(self) -> None:
        check_running(self.ledger)
        self.iterations += 1
        elitist_before = self.ledger.elitist

        p = self.evaluate(Solution(self.spec.random_genotype(self.rng)))
        self.levels[0].add(p)
        top = len(self.levels) - 1
        level = 0
        added = True
        while level <= top and added:
            added = False
            population = self.levels[level].genes
            fos = learn_fos(population, self.spec.alphabet_size, self.rng)
            o = gom_improve(p, population, fos, self.evaluate, self.rng)
            if compare_solutions(o, p) == 1:
                if level == top:
                    self.levels.append(Level(self.spec.num_vars))
                self.levels[level + 1].add(o)
                added = True
            p = o
            level += 1

        if self.surrogate is not None:
            if self.ledger.elitist is elitist_before:
                self.surrogate.relax()
            self.surrogate.retrain()

    def run(self, max_iterations: Optional[int] = None) -> str:
        """Iterate until a termination signal; returns its reason."""
        try:
            if self.surrogate is not None:
                self.initialize_surrogate()
            while max_iterations is None or self.iterations < max_iterations:
                self.iterate()
            return "max_iterations"
        except TerminationSignal as exc:
            return exc.reason


def run_p3(
    spec: ProblemSpec,
    fitness_fn: Callable[[np.ndarray], float],
    budget: int,
    seed: int,
    surrogate: Optional[str] = None,
    eta: float = DEFAULT_ETA,
    run_id: int = 0,
    time_limit: Optional[float] = None,
    target: Optional[float] = None,
    record_timing: bool = False,
    max_iterations: Optional[int] = None,
) -> RunResult:
    """Run P3-GOMEA, or SA-P3-GOMEA when ``surrogate`` names a regressor kind."""
    if surrogate is not None:
        if budget < spec.num_vars:
            raise ConfigError(
                f"surrogate mode spends {spec.num_vars} initial evaluations but the budget is {budget}"
            )
        if spec.num_vars < 3:
            raise ConfigError("surrogate mode needs at least 3 variables for 3-fold tuning")
    ledger, recorder = open_run(spec, fitness_fn, budget, run_id, seed, time_limit, target, record_timing)
    rng = np.random.default_rng(seed)
    state = None
    if surrogate is not None:
        state = SurrogateState(
            kind=surrogate,
            alphabet_size=spec.alphabet_size,
            eta=eta,
            scale_targets=not spec.normalizes,
            seed=int(rng.integers(2**31 - 1)),
        )
    algo = P3Gomea(spec, ledger, rng, state)
    reason = algo.run(max_iterations)
    info = {"iterations": algo.iterations, "pyramid_sizes": [len(lvl) for lvl in algo.levels]}
    if state is not None:
        info.update(
            hyperparameters=state.hyperparameters,
            archive_size=len(state.genes),
            final_lambda=state.lam,
        )
    return close_run(ledger, recorder, reason, **info)
