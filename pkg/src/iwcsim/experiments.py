"""Parameter sweeps: built-in suites, custom grids, long-format results and pooled summaries.

Replication ``r`` of every condition runs with seed ``seed + r``, so conditions are compared on
common random numbers (same population quantiles and spawn draws).
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import yaml

from .config import ConfigError, PedestrianConfig, ScenarioConfig, from_dict, set_path, to_dict, validate
from .engine import run_simulation
from .output import csv_text, json_text, write_files

TRAFFIC = {6.0: "light", 4.0: "medium", 2.0: "heavy"}

# pooled over crossings: metric -> (count, mean, stdev) aggregate keys
POOLED = {
    "wait_s": ("n_wait", "mean_wait_s", "std_wait_s"),
    "min_ttc_s": ("n_min_ttc", "mean_min_ttc_s", "std_min_ttc_s"),
    "crossing_duration_s": ("n_crossing_duration", "mean_crossing_duration_s", "std_crossing_duration_s"),
}
# pooled as count ratios: metric -> (numerator, denominator, scale)
RATIOS = {"illegal_pct": ("illegal_crossings", "crossings_completed", 100.0)}


# ---------------------------------------------------------------- condition variables


def _apply_trait(cfg: ScenarioConfig, value: str) -> None:
    cfg.pedestrians.trait_pct = PedestrianConfig().trait_pct if value == "random" else {value: 100.0}


def _apply_law(cfg: ScenarioConfig, value: str) -> None:
    cfg.pedestrians.law_pct = PedestrianConfig().law_pct if value == "random" else {value: 100.0}


def _apply_aggressive(cfg: ScenarioConfig, value: float) -> None:
    # the non-aggressive remainder keeps the default average:conservative proportions
    base = PedestrianConfig().trait_pct
    rest = {k: v for k, v in base.items() if k != "aggressive"}
    total = sum(rest.values())
    pct = {"aggressive": float(value)}
    for k, v in rest.items():
        pct[k] = (100.0 - float(value)) * v / total
    cfg.pedestrians.trait_pct = pct


def _apply_pattern(cfg: ScenarioConfig, value: str) -> None:
    if value not in ("one-stage", "rolling-gap"):
        raise ConfigError(f"unknown crossing pattern {value!r}", key="pattern")
    cfg.pedestrians.one_stage_pct = 100.0 if value == "one-stage" else 0.0


CONDITION_VARS: dict[str, Callable[[ScenarioConfig, Any], None]] = {
    "ttc_method": lambda cfg, v: setattr(cfg.decision, "ttc_method", v),
    "period": lambda cfg, v: setattr(cfg.vehicles, "period", float(v)),
    "trait": _apply_trait,
    "law": _apply_law,
    "aggressive_pct": _apply_aggressive,
    "pattern": _apply_pattern,
}


def apply_condition(cfg: ScenarioConfig, var: str, value: Any) -> None:
    """Named condition variables, or any dotted config path."""
    if var in CONDITION_VARS:
        CONDITION_VARS[var](cfg, value)
    else:
        set_path(cfg, var, value)


# ---------------------------------------------------------------- suites


@dataclass(frozen=True)
class Suite:
    name: str
    grid: tuple[tuple[str, tuple], ...]
    base: Mapping[str, Any] = field(default_factory=dict)
    replications: int = 5
    steps: int = 1000
    metrics: tuple[str, ...] = ("wait_s", "min_ttc_s", "collisions")
    column: str | None = "period"  # condition variable spread across summary columns

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.grid)

    def conditions(self) -> list[tuple]:
        return list(itertools.product(*(vals for _, vals in self.grid)))

    def select(self, **values: Sequence) -> "Suite":
        """Restrict some condition variables to a subset of values (order kept from ``values``)."""
        unknown = set(values) - set(self.variables)
        if unknown:
            raise ConfigError(f"unknown condition variables {sorted(unknown)}", key="grid")
        grid = tuple((v, tuple(values[v]) if v in values else vals) for v, vals in self.grid)
        return dataclasses.replace(self, grid=grid)

    def with_base(self, **overrides: Any) -> "Suite":
        return dataclasses.replace(self, base={**self.base, **overrides})


PERIODS = (6.0, 4.0, 2.0)

SUITES: dict[str, Suite] = {
    "lawobedience_traits": Suite(
        "lawobedience_traits",
        grid=(
            ("law", ("violating", "average", "obedient", "random")),
            ("trait", ("aggressive", "average", "conservative", "random")),
        ),
        base={"period": 2.0},
        steps=2500,
        metrics=("illegal_pct", "crossings_completed"),
        column="trait",
    ),
    "aggressive_sweep": Suite(
        "aggressive_sweep",
        grid=(
            ("law", ("average", "violating")),
            ("period", (8.0, 6.0, 5.0, 4.0, 3.0)),
            ("aggressive_pct", (0.0, 25.0, 50.0, 75.0, 100.0)),
        ),
        base={"ttc_method": "dynamic"},
        metrics=("illegal_pct", "mean_walking_speed_mps", "min_ttc_s"),
        column="aggressive_pct",
    ),
    "ttc_methods": Suite(
        "ttc_methods",
        grid=(
            ("ttc_method", ("constant", "average", "dynamic", "dynamic_adj", "dynamic_adj_noise")),
            ("period", PERIODS),
        ),
        base={"law": "violating", "pattern": "one-stage"},
        metrics=("wait_s", "min_ttc_s", "collisions"),
    ),
    "crossing_patterns": Suite(
        "crossing_patterns",
        grid=(("pattern", ("rolling-gap", "one-stage")), ("period", PERIODS)),
        base={"law": "violating", "ttc_method": "dynamic_adj"},
        metrics=("wait_s", "min_ttc_s", "crossing_duration_s"),
    ),
}
SUITE_NAMES = tuple(SUITES) + ("custom",)


def get_suite(name: str) -> Suite:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; available: {', '.join(SUITE_NAMES)}", key="suite")
    return SUITES[name]


def load_custom_suite(path: str | Path) -> tuple[Suite, ScenarioConfig]:
    """Custom grid file: ``name``, optional ``scenario`` (mapping), ``base``, ``grid``,
    ``replications``, ``steps``, ``metrics``."""
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", key="<root>")
    allowed = {"name", "scenario", "base", "grid", "replications", "steps", "metrics", "column"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", key="<root>")
    grid = data.get("grid") or {}
    if not isinstance(grid, dict) or any(not isinstance(v, list) or not v for v in grid.values()):
        raise ConfigError("grid must map variables to non-empty lists", key="grid")
    base_cfg = from_dict(data.get("scenario") or {})
    suite = Suite(
        str(data.get("name", "custom")),
        grid=tuple((str(k), tuple(v)) for k, v in grid.items()),
        base=dict(data.get("base") or {}),
        replications=int(data.get("replications", base_cfg.simulation.replications)),
        steps=int(data.get("steps", base_cfg.simulation.steps)),
        metrics=tuple(data.get("metrics", ("wait_s", "min_ttc_s", "collisions", "illegal_pct"))),
        column=data.get("column"),
    )
    if suite.replications < 1:
        raise ConfigError("must be >= 1", key="replications")
    condition_config(suite, base_cfg, suite.conditions()[0])  # fail before any run
    return suite, base_cfg


def condition_config(suite: Suite, base: ScenarioConfig, condition: tuple) -> ScenarioConfig:
    cfg = from_dict(to_dict(base))
    for var, value in suite.base.items():
        apply_condition(cfg, var, value)
    for var, value in zip(suite.variables, condition):
        apply_condition(cfg, var, value)
    cfg.simulation.steps = suite.steps
    validate(cfg)
    return cfg


# ---------------------------------------------------------------- execution


@dataclass
class ExperimentResult:
    suite: Suite
    seed: int
    # (condition, replication) -> run aggregates, in grid then replication order
    runs: dict[tuple[tuple, int], dict]

    def long_rows(self) -> list[tuple]:
        rows = []
        for (cond, rep), agg in self.runs.items():
            for metric, value in agg.items():
                rows.append((self.suite.name, *cond, rep, metric, value))
        return rows

    def replicates(self, condition: tuple) -> list[dict]:
        return [agg for (c, _), agg in self.runs.items() if c == tuple(condition)]

    def pooled(self, condition: tuple, metric: str) -> tuple[float | None, float | None]:
        return pooled_stat(self.replicates(condition), metric)

    def summary(self) -> list[dict]:
        out = []
        for cond in self.suite.conditions():
            reps = self.replicates(cond)
            entry = dict(zip(self.suite.variables, cond))
            entry["replications"] = len(reps)
            for m in self.suite.metrics:
                mean, std = pooled_stat(reps, m)
                entry[m] = {"mean": mean, "std": std}
            out.append(entry)
        return out


def _run_task(task: tuple) -> tuple[tuple, int, dict]:
    cond, rep, cfg_dict, seed = task
    result = run_simulation(from_dict(cfg_dict), seed=seed)
    return cond, rep, dict(result.summary.aggregates)


def run_suite(
    suite: Suite,
    base: ScenarioConfig | None = None,
    jobs: int = 1,
    seed: int = 0,
    progress: Callable[[int, int], None] | None = None,
) -> ExperimentResult:
    """Run the full cross-product of conditions times replications (``jobs`` worker processes)."""
    base = base or ScenarioConfig()
    tasks = []
    for cond in suite.conditions():
        cfg = to_dict(condition_config(suite, base, cond))
        for rep in range(suite.replications):
            tasks.append((cond, rep, cfg, seed + rep))
    done: dict[tuple[tuple, int], dict] = {}
    if jobs <= 1:
        results = map(_run_task, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_run_task, tasks)
    try:
        for i, (cond, rep, agg) in enumerate(results, 1):
            done[(cond, rep)] = agg
            if progress is not None:
                progress(i, len(tasks))
    finally:
        if pool is not None:
            pool.shutdown()
    ordered = {(c, r): done[(c, r)] for c, r, _, _ in tasks}
    return ExperimentResult(suite, seed, ordered)


# ---------------------------------------------------------------- pooling


def pooled_stat(reps: Sequence[Mapping[str, Any]], metric: str) -> tuple[float | None, float | None]:
    """Pooled mean and stdev of ``metric`` over replications.

    Per-crossing metrics pool the underlying samples exactly from (count, mean, stdev); ratio
    metrics pool counts (stdev across runs); anything else is a per-run value averaged over runs.
    """
    if metric in POOLED:
        nk, mk, sk = POOLED[metric]
        parts = [(r[nk], r[mk], r[sk]) for r in reps if r.get(nk)]
        n = sum(p[0] for p in parts)
        if n == 0:
            return None, None
        mean = sum(k * m for k, m, _ in parts) / n
        if n < 2:
            return mean, 0.0
        ss = sum((k - 1) * s * s + k * (m - mean) ** 2 for k, m, s in parts)
        return mean, math.sqrt(ss / (n - 1))
    if metric in RATIOS:
        num, den, scale = RATIOS[metric]
        total = sum(r.get(den) or 0 for r in reps)
        if total == 0:
            return None, None
        mean = scale * sum(r.get(num) or 0 for r in reps) / total
        per_run = [scale * r[num] / r[den] for r in reps if r.get(den)]
        return mean, statistics.stdev(per_run) if len(per_run) > 1 else 0.0
    vals = [float(r[metric]) for r in reps if r.get(metric) is not None and math.isfinite(r[metric])]
    if not vals:
        return None, None
    return statistics.fmean(vals), statistics.stdev(vals) if len(vals) > 1 else 0.0


def format_cell(mean: float | None, std: float | None, digits: int = 1) -> str:
    if mean is None:
        return "-"
    return f"{mean:.{digits}f} ({std:.{digits}f})"


def _label(var: str, value: Any) -> str:
    if var == "period" and float(value) in TRAFFIC:
        return TRAFFIC[float(value)]
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    return f"{var}={value}"


def summary_table(result: ExperimentResult) -> str:
    """Markdown table of "mean (stdev)" cells; the suite's column variable spreads across columns."""
    suite = result.suite
    col = suite.column if suite.column in suite.variables else None
    row_vars = [v for v in suite.variables if v != col]
    col_vals = dict(suite.grid)[col] if col else (None,)
    summ = result.summary()
    header = list(row_vars) + [
        m if col is None else f"{m} {_label(col, cv)}" for m in suite.metrics for cv in col_vals
    ]
    lines = ["| " + " | ".join(header or ["metric"]) + " |", "|" + "---|" * max(len(header), 1)]
    keyed = {tuple(e[v] for v in suite.variables): e for e in summ}
    seen = []
    for cond in suite.conditions():
        rkey = tuple(val for var, val in zip(suite.variables, cond) if var != col)
        if rkey in seen:
            continue
        seen.append(rkey)
        cells = [str(x) for x in rkey]
        for m in suite.metrics:
            for cv in col_vals:
                full = []
                it = iter(rkey)
                for var in suite.variables:
                    full.append(cv if var == col else next(it))
                e = keyed[tuple(full)][m]
                cells.append(format_cell(e["mean"], e["std"]))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def suite_files(result: ExperimentResult) -> dict[str, str]:
    suite = result.suite
    header = ("suite", *suite.variables, "replication", "metric", "value")
    summ = result.summary()
    flat = []
    for e in summ:
        row = {v: e[v] for v in suite.variables}
        row["replications"] = e["replications"]
        for m in suite.metrics:
            row[m] = format_cell(e[m]["mean"], e[m]["std"], 2)
        flat.append(row)
    flat_header = (*suite.variables, "replications", *suite.metrics)
    return {
        f"{suite.name}.csv": csv_text(header, result.long_rows()),
        f"{suite.name}_summary.csv": csv_text(flat_header, flat),
        f"{suite.name}_summary.md": summary_table(result),
        f"{suite.name}_summary.json": json_text(
            {"suite": suite.name, "seed": result.seed, "replications": suite.replications, "steps": suite.steps,
             "conditions": summ}
        ),
    }


def write_suite(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    return write_files(out_dir, suite_files(result))


__all__ = [
    "CONDITION_VARS", "ExperimentResult", "SUITES", "SUITE_NAMES", "Suite", "apply_condition",
    "condition_config", "format_cell", "get_suite", "load_custom_suite", "pooled_stat", "run_suite",
    "suite_files", "summary_table", "write_suite",
]
