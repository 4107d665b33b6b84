"""Command-line interface: ``run``, ``aggregate`` and ``test-eval``."""

from __future__ import annotations

import argparse
import glob
import logging
import sys
from pathlib import Path

from .harness import (
    ExperimentConfig,
    aggregate_trajectories,
    evaluate_on_test,
    load_manifest,
    run_experiment,
    write_table,
)
from .problems import SplitSpec
from .pyramid import ConfigError

# flag name -> ExperimentConfig field
RUN_FLAGS = {
    "algo": "algorithm",
    "problem": "problem",
    "dataset": "dataset",
    "num_vars": "num_vars",
    "alphabet": "alphabet",
    "trap_k": "trap_k",
    "budget": "budget",
    "eta": "eta",
    "surrogate": "surrogate",
    "runs": "runs",
    "seed": "seed",
    "split_seed": "split_seed",
    "out": "out",
    "workers": "workers",
    "time_limit_s": "time_limit_s",
    "target": "target",
    "record_timing": "record_timing",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="p3gomea", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment")
    run.add_argument("--config", help="YAML file with config keys; flags override it")
    run.add_argument("--algo", choices=["rs", "ls", "p3", "sa-p3"])
    run.add_argument("--problem", choices=["partition", "trap", "onemax"])
    run.add_argument("--dataset", help="CSV dataset (default: bundled synthetic set)")
    run.add_argument("--num-vars", type=int)
    run.add_argument("--alphabet", type=int)
    run.add_argument("--trap-k", type=int)
    run.add_argument("--budget", type=int)
    run.add_argument("--eta", type=float)
    run.add_argument("--surrogate", choices=["svr", "random_forest"])
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--split-seed", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.add_argument("--time-limit-s", type=float)
    run.add_argument("--target", type=float, help="stop a run once this fitness is reached")
    run.add_argument("--record-timing", action="store_true", default=None,
                     help="write wall-clock elapsed_ms (output is then not reproducible)")

    agg = sub.add_parser("aggregate", help="mean elitist fitness per evaluation checkpoint")
    agg.add_argument("--in", dest="inputs", nargs="+", required=True,
                     help="trajectory files, directories or glob patterns")
    agg.add_argument("--checkpoints", required=True, help="comma-separated evaluation counts")
    agg.add_argument("--out", help="output CSV (default: stdout)")

    test = sub.add_parser("test-eval", help="test-set accuracy of a run's final elitist")
    test.add_argument("--trajectory", required=True)
    test.add_argument("--dataset", help="dataset file (default: the one in the manifest)")
    test.add_argument("--split-seed", type=int)
    test.add_argument("--validation-size", type=int)
    test.add_argument("--test-size", type=int)
    return parser


def _collect(inputs) -> list[Path]:
    files: list[Path] = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            files.extend(sorted(path.glob("run_*.csv")))
        elif path.exists():
            files.append(path)
        else:
            files.extend(Path(p) for p in sorted(glob.glob(item)))
    return files


def cmd_run(args) -> int:
    overrides = {field: getattr(args, flag) for flag, field in RUN_FLAGS.items()}
    if args.config:
        config = ExperimentConfig.from_file(args.config, **overrides)
    else:
        config = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    manifest = run_experiment(config)
    print(manifest)
    return 0


def cmd_aggregate(args) -> int:
    checkpoints = [int(c) for c in args.checkpoints.split(",") if c.strip()]
    table = aggregate_trajectories(_collect(args.inputs), checkpoints)
    if args.out:
        write_table(table, args.out)
    else:
        print("checkpoint,mean,min,max,runs")
        for row in table:
            print(f"{row['checkpoint']},{row['mean']!r},{row['min']!r},{row['max']!r},{row['runs']}")
    return 0


def cmd_test_eval(args) -> int:
    manifest = load_manifest(args.trajectory)
    split = None
    if any(v is not None for v in (args.split_seed, args.validation_size, args.test_size)):
        recorded = manifest.get("split", {})
        split = SplitSpec(
            train_size=recorded.get("train_size", 0),
            seed=args.split_seed if args.split_seed is not None else recorded.get("seed", 0),
            validation_size=args.validation_size or recorded.get("validation_size", 0),
            test_size=args.test_size or recorded.get("test_size", 0),
        )
    print(repr(evaluate_on_test(args.trajectory, args.dataset, split, manifest)))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    handlers = {"run": cmd_run, "aggregate": cmd_aggregate, "test-eval": cmd_test_eval}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
