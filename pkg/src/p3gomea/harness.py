"""Experiment driver: configuration, runs, trajectory files and aggregation."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import yaml

from .baselines import local_search, random_search
from .genotype import FitnessKind, ProblemSpec, RunResult, TrajectoryRecord, parse_genotype_key
from .problems import (
    VALIDATION_SIZE,
    TEST_SIZE,
    Dataset,
    PartitionEnsembleProblem,
    SplitSpec,
    bundled_dataset_path,
    file_digest,
    make_fitness,
    read_dataset,
    split_dataset,
)
from .pyramid import DEFAULT_ETA, ConfigError, run_p3
from .surrogate import REGRESSOR_KINDS

log = logging.getLogger(__name__)

ALGORITHMS = ("rs", "ls", "p3", "sa-p3")
PROBLEMS = {
    "partition": FitnessKind.PARTITION_ENSEMBLE,
    "trap": FitnessKind.TRAP,
    "onemax": FitnessKind.CATEGORICAL_ONEMAX,
}
TRAJECTORY_FIELDS = [f.name for f in dataclasses.fields(TrajectoryRecord)]
MANIFEST_NAME = "manifest.json"


class SplitMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass
class ExperimentConfig:
    algorithm: str = "sa-p3"
    problem: str = "partition"
    dataset: Optional[str] = None
    num_vars: int = 100
    alphabet: int = 5
    trap_k: int = 5
    budget: int = 5000
    time_limit_s: Optional[float] = None
    eta: float = DEFAULT_ETA
    surrogate: str = "svr"
    runs: int = 10
    seed: int = 0
    split_seed: Optional[int] = None
    out: str = "results"
    workers: int = 1
    target: Optional[float] = None
    record_timing: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; expected one of {tuple(PROBLEMS)}")
        if self.surrogate not in REGRESSOR_KINDS:
            raise ConfigError(f"unknown surrogate {self.surrogate!r}; expected one of {REGRESSOR_KINDS}")
        if self.num_vars < 1 or self.alphabet < 2:
            raise ConfigError("need num_vars >= 1 and alphabet >= 2")
        if self.budget < 0 or self.runs < 1 or self.workers < 1:
            raise ConfigError("budget must be >= 0, runs and workers >= 1")
        if self.algorithm == "sa-p3" and self.budget < self.num_vars:
            raise ConfigError(
                f"sa-p3 spends num_vars={self.num_vars} initial evaluations; budget {self.budget} is too small"
            )
        if not 0 < self.eta < 1:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}")
        try:
            self.problem_spec()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def resolved_split_seed(self) -> int:
        return self.seed if self.split_seed is None else self.split_seed

    def problem_spec(self) -> ProblemSpec:
        kind = PROBLEMS[self.problem]
        config = {"block_size": self.trap_k} if kind is FitnessKind.TRAP else {}
        alphabet = 2 if kind is FitnessKind.TRAP else self.alphabet
        return ProblemSpec(self.num_vars, alphabet, kind, config)

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.num_vars, self.resolved_split_seed, VALIDATION_SIZE, TEST_SIZE)

    def dataset_path(self) -> Path:
        return Path(self.dataset) if self.dataset else bundled_dataset_path()

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            values = yaml.safe_load(fh) or {}
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: expected a mapping of config keys")
        values = {k.replace("-", "_"): v for k, v in values.items()}
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)


def _load_problem(config: ExperimentConfig):
    spec = config.problem_spec()
    if spec.fitness_kind is FitnessKind.PARTITION_ENSEMBLE:
        train, validation, _ = split_dataset(read_dataset(config.dataset_path()), config.split_spec())
        return spec, make_fitness(spec, train, validation)
    return spec, make_fitness(spec)


def run_single(config: ExperimentConfig, run_id: int, fitness=None, spec=None) -> RunResult:
    """Execute one run with seed ``config.seed + run_id``."""
    if fitness is None:
        spec, fitness = _load_problem(config)
    seed = config.seed + run_id
    common = dict(
        run_id=run_id,
        time_limit=config.time_limit_s,
        target=config.target,
        record_timing=config.record_timing,
    )
    if config.algorithm == "rs":
        return random_search(spec, fitness, config.budget, seed, **common)
    if config.algorithm == "ls":
        return local_search(spec, fitness, config.budget, seed, **common)
    surrogate = config.surrogate if config.algorithm == "sa-p3" else None
    return run_p3(spec, fitness, config.budget, seed, surrogate=surrogate, eta=config.eta, **common)


def trajectory_path(out_dir, run_id: int) -> Path:
    return Path(out_dir) / f"run_{run_id:03d}.csv"


def write_trajectory(rows: Iterable[TrajectoryRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_FIELDS)
        for r in rows:
            writer.writerow(
                [r.run_id, r.seed, r.real_evals, r.elapsed_ms, repr(float(r.elitist_fitness)), r.elitist_genotype]
            )


def read_trajectory(path) -> list[TrajectoryRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAJECTORY_FIELDS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [
            TrajectoryRecord(
                int(row["run_id"]),
                int(row["seed"]),
                int(row["real_evals"]),
                int(row["elapsed_ms"]),
                float(row["elitist_fitness"]),
                row["elitist_genotype"],
            )
            for row in reader
        ]


def _run_job(config: ExperimentConfig, run_id: int) -> dict:
    started = time.perf_counter()
    try:
        result = run_single(config, run_id)
    except Exception as exc:  # one failing run must not abort its siblings
        log.exception("run %d failed", run_id)
        return {"run_id": run_id, "status": "error", "error": f"{type(exc).__name__}: {exc}"}
    path = trajectory_path(config.out, run_id)
    write_trajectory(result.trajectory, path)
    log.info(
        "run %d: %s after %d evaluations, best %s (%.1fs)",
        run_id,
        result.termination_reason,
        result.real_evals,
        result.elitist.fitness if result.elitist else None,
        time.perf_counter() - started,
    )
    return {
        "run_id": run_id,
        "seed": config.seed + run_id,
        "status": "ok",
        "trajectory": path.name,
        "termination_reason": result.termination_reason,
        "real_evals": result.real_evals,
        "best_fitness": result.elitist.fitness if result.elitist else None,
        **result.info,
    }


def run_experiment(config: ExperimentConfig) -> Path:
    """Execute all runs and write one trajectory file per run plus a manifest."""
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": dataclasses.asdict(config)}
    if config.problem == "partition":
        path = config.dataset_path()
        data = read_dataset(path)
        split = config.split_spec()
        if len(data) < split.validation_size + split.test_size + split.train_size:
            raise ConfigError(f"{path} has {len(data)} samples, too few for train size {split.train_size}")
        manifest["dataset"] = {"path": str(path), "samples": len(data), "sha256": file_digest(path)}
        manifest["split"] = dataclasses.asdict(split)

    run_ids = range(config.runs)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(_run_job, [config] * config.runs, run_ids))
    else:
        runs = [_run_job(config, i) for i in run_ids]
    manifest["runs"] = runs
    manifest_path = out / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return manifest_path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def value_at(rows: Sequence[TrajectoryRecord], checkpoint: int) -> float:
    """Elitist fitness after ``checkpoint`` evaluations, carried forward.

    Before the first record the run contributes its first recorded value.
    """
    current = rows[0].elitist_fitness
    for r in rows:
        if r.real_evals > checkpoint:
            break
        current = r.elitist_fitness
    return current


def aggregate_trajectories(files: Sequence, checkpoints: Sequence[int]) -> list[dict]:
    runs = []
    for f in sorted(str(p) for p in files):
        rows = sorted(read_trajectory(f), key=lambda r: r.real_evals)
        if rows:
            runs.append(rows)
    if not runs:
        raise EmptyInput("no trajectory rows to aggregate")
    checkpoints = sorted(int(c) for c in checkpoints)
    table = []
    for c in checkpoints:
        values = np.array([value_at(rows, c) for rows in runs])
        table.append(
            {
                "checkpoint": c,
                "mean": float(values.mean()),
                "min": float(values.min()),
                "max": float(values.max()),
                "runs": len(values),
            }
        )
    return table


def write_table(table: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["checkpoint", "mean", "min", "max", "runs"], lineterminator="\n")
        writer.writeheader()
        for row in table:
            writer.writerow({**row, "mean": repr(row["mean"]), "min": repr(row["min"]), "max": repr(row["max"])})


def load_manifest(trajectory_file) -> dict:
    path = Path(trajectory_file).parent / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} next to {trajectory_file}")
    return json.loads(path.read_text())


def evaluate_on_test(
    trajectory_file,
    dataset=None,
    split: Optional[SplitSpec] = None,
    manifest: Optional[dict] = None,
) -> float:
    """Test-set accuracy of the ensemble defined by a run's final elitist."""
    manifest = manifest if manifest is not None else load_manifest(trajectory_file)
    if manifest["config"]["problem"] != "partition" or "split" not in manifest:
        raise ConfigError("test evaluation applies to partition-ensemble runs only")
    recorded = SplitSpec(**manifest["split"])
    if split is not None and split != recorded:
        raise SplitMismatch(f"split {split} differs from the run's split {recorded}")
    dataset = Path(dataset) if dataset is not None else Path(manifest["dataset"]["path"])
    if file_digest(dataset) != manifest["dataset"]["sha256"]:
        raise SplitMismatch(f"{dataset} is not the dataset the run was split from")

    rows = read_trajectory(trajectory_file)
    if not rows:
        raise EmptyInput(f"{trajectory_file} has no elitist")
    final = max(rows, key=lambda r: r.real_evals)
    genes = parse_genotype_key(final.elitist_genotype)
    train, _, test = split_dataset(read_dataset(dataset), recorded)
    problem = PartitionEnsembleProblem(train, test)
    return problem(genes)


def baseline_accuracy(data: Dataset, split: SplitSpec, on: str = "validation") -> float:
    train, validation, test = split_dataset(data, split)
    return PartitionEnsembleProblem(train, validation).baseline(test if on == "test" else validation)
