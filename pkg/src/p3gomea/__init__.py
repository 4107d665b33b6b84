"""P3-GOMEA and surrogate-assisted P3-GOMEA for categorical black-box optimization."""

from .genotype import (
    BudgetExhausted,
    EvaluationLedger,
    FitnessKind,
    ProblemSpec,
    RunResult,
    Solution,
    TimeLimitExceeded,
    TrajectoryRecord,
    genotype_key,
    normalize_partition,
)
from .pyramid import P3Gomea, SurrogateState, run_p3, sa_evaluate, set_threshold

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted",
    "EvaluationLedger",
    "FitnessKind",
    "P3Gomea",
    "ProblemSpec",
    "RunResult",
    "Solution",
    "SurrogateState",
    "TimeLimitExceeded",
    "TrajectoryRecord",
    "genotype_key",
    "normalize_partition",
    "run_p3",
    "sa_evaluate",
    "set_threshold",
]
