"""Command line: ``run``, ``experiment`` and ``validate``.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Sequence

from .config import ConfigError, ScenarioConfig, parse_scenario
from .engine import run_simulation
from .experiments import SUITE_NAMES, get_suite, load_custom_suite, run_suite, suite_files
from .output import OUT_ENV, default_out_dir, run_files, write_files

EXIT_CONFIG = 2
EXIT_IO = 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iwcsim", description="Intend-Wait-Cross pedestrian crossing simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    out_help = f"output directory (default: ${OUT_ENV} or ./iwcsim_out)"

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--scenario", required=True, help="YAML scenario file")
    run.add_argument("--seed", type=int, help="override simulation.seed")
    run.add_argument("--steps", type=int, help="override simulation.steps")
    run.add_argument("--out", help=out_help)

    exp = sub.add_parser("experiment", help="run a parameter sweep")
    exp.add_argument("--suite", required=True, help=f"one of: {', '.join(SUITE_NAMES)}")
    exp.add_argument("--grid", help="grid file for --suite custom")
    exp.add_argument("--scenario", help="base scenario file (built-in suites)")
    exp.add_argument("--jobs", type=int, default=1, help="worker processes")
    exp.add_argument("--replications", type=int, help="override the suite's replication count")
    exp.add_argument("--steps", type=int, help="override the suite's step count")
    exp.add_argument("--seed", type=int, default=0, help="seed of replication 0")
    exp.add_argument("--out", help=out_help)
    exp.add_argument("--quiet", action="store_true", help="no progress output")

    val = sub.add_parser("validate", help="parse and validate a scenario file")
    val.add_argument("--scenario", required=True, help="YAML scenario file")
    return ap


def _load(path: str) -> ScenarioConfig:
    try:
        return parse_scenario(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc


def cmd_run(args) -> int:
    cfg = _load(args.scenario)
    if args.steps is not None:
        if args.steps < 0:
            raise ConfigError("must be >= 0", key="--steps")
        cfg.simulation.steps = args.steps
    seed = cfg.simulation.seed if args.seed is None else args.seed
    cfg.simulation.seed = seed
    result = run_simulation(cfg, seed=seed)
    out = Path(args.out) if args.out else default_out_dir()
    for path in write_files(out, run_files(cfg, result)):
        print(path)
    return 0


def cmd_experiment(args) -> int:
    if args.suite == "custom":
        if not args.grid:
            raise ConfigError("--suite custom needs --grid FILE", key="--grid")
        suite, base = load_custom_suite(args.grid)
    else:
        suite = get_suite(args.suite)
        base = _load(args.scenario) if args.scenario else ScenarioConfig()
    if args.replications is not None:
        if args.replications < 1:
            raise ConfigError("must be >= 1", key="--replications")
        suite = dataclasses.replace(suite, replications=args.replications)
    if args.steps is not None:
        if args.steps < 0:
            raise ConfigError("must be >= 0", key="--steps")
        suite = dataclasses.replace(suite, steps=args.steps)

    def progress(i: int, n: int) -> None:
        print(f"\r{suite.name}: {i}/{n} runs", end="\n" if i == n else "", file=sys.stderr, flush=True)

    result = run_suite(suite, base, jobs=max(1, args.jobs), seed=args.seed, progress=None if args.quiet else progress)
    out = Path(args.out) if args.out else default_out_dir()
    files = suite_files(result)
    for path in write_files(out, files):
        print(path)
    print(files[f"{suite.name}_summary.md"], end="")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args.scenario)
    print(f"{args.scenario}: ok (ttc_method={cfg.decision.ttc_method}, steps={cfg.simulation.steps})")
    return 0


COMMANDS = {"run": cmd_run, "experiment": cmd_experiment, "validate": cmd_validate}


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
