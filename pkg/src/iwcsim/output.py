"""CSV/JSON emission in one fixed dialect, with all-or-nothing directory writes.

Dialect: comma-separated, '.' decimal, LF line endings, header row, UTF-8. Floats are written
with ``repr`` (shortest round-trip form), absent values as empty fields, infinities as ``inf``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .config import ScenarioConfig, emit_scenario
from .engine import SimulationResult

OUT_ENV = "IWCSIM_OUT"
DEFAULT_OUT = "iwcsim_out"

METRIC_COLUMNS = (
    "run_id", "seed", "ped_id", "crossing", "kind", "legal", "arm", "type", "trait", "law_obedience",
    "pattern", "speed_mps", "crs_speed_mps", "gap_s", "c_gap_s", "wait_start_s", "cross_start_s",
    "cross_end_s", "wait_time_s", "min_ttc_s", "crossing_duration_s", "midroad_waits", "status", "collided",
)
EVENT_COLUMNS = ("run_id", "seed", "t", "ped_id", "event", "detail")
POPULATION_COLUMNS = (
    "id", "type", "trait", "law_obedience", "speed_mps", "gap_s", "pattern", "p_noise", "th_dist_c_m",
)
VEHICLE_TRACE_COLUMNS = ("t", "veh_id", "lane", "pos_m", "speed_mps", "accel_mps2", "signal")
TTC_TRACE_COLUMNS = ("t", "ped_id", "veh_id", "lane", "raw_s", "adjusted_s", "perceived_s", "verdict")


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


def format_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any] | Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        vals = [r.get(h) for h in header] if isinstance(r, Mapping) else r
        w.writerow([format_value(v) for v in vals])
    return buf.getvalue()


def _clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings so the file stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return format_value(obj)
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def json_text(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_files(out_dir: str | Path, files: Mapping[str, str]) -> list[Path]:
    """Write every file or none: content goes to hidden temporaries that are renamed at the end."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged: list[tuple[Path, Path]] = []
    try:
        for name, text in files.items():
            final = out / name
            final.parent.mkdir(parents=True, exist_ok=True)
            tmp = final.with_name(f".{final.name}.tmp")
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, final))
        for tmp, final in staged:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    return [final for _, final in staged]


def run_id(cfg: ScenarioConfig, seed: int) -> str:
    digest = hashlib.sha1(emit_scenario(cfg).encode("utf-8")).hexdigest()[:10]
    return f"{digest}-s{seed}"


def run_files(cfg: ScenarioConfig, result: SimulationResult) -> dict[str, str]:
    """File name -> content for one run (traces only when enabled in the config)."""
    from .agents import population_rows

    rid = run_id(cfg, result.seed)
    base = {"run_id": rid, "seed": result.seed}
    metrics = [{**base, **row} for row in result.summary.rows]
    events = [
        (rid, result.seed, round(t, 6), pid, name, json.dumps(_clean(extra), sort_keys=True) if extra else "")
        for t, pid, name, extra in result.events
    ]
    summary = {
        "run_id": rid,
        "seed": result.seed,
        "aggregates": result.summary.aggregates,
        "collisions": [
            {
                "time": c.time, "ped_id": c.ped_id, "veh_id": c.veh_id, "lane": c.lane,
                "ped_phase": c.ped_phase, "relative_speed": c.relative_speed,
            }
            for c in result.summary.collisions
        ],
    }
    files = {
        "metrics.csv": csv_text(METRIC_COLUMNS, metrics),
        "events.csv": csv_text(EVENT_COLUMNS, events),
        "summary.json": json_text(summary),
        "population.csv": csv_text(POPULATION_COLUMNS, population_rows(result.population)),
        "scenario.yaml": emit_scenario(cfg),
    }
    if cfg.simulation.vehicle_trace:
        files["vehicle_trace.csv"] = csv_text(VEHICLE_TRACE_COLUMNS, result.vehicle_trace)
    if cfg.simulation.ttc_trace:
        files["ttc_trace.csv"] = csv_text(TTC_TRACE_COLUMNS, result.ttc_trace)
    return files
