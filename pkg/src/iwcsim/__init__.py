"""Intend-Wait-Cross: microscopic agent-based simulation of pedestrian road crossing."""

from .config import ConfigError, ScenarioConfig, emit_scenario, parse_scenario, parse_scenario_text
from .engine import MetricsSummary, SimulationResult, World, run_simulation
from .experiments import SUITES, get_suite, run_suite

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "MetricsSummary",
    "SUITES",
    "ScenarioConfig",
    "SimulationResult",
    "World",
    "emit_scenario",
    "get_suite",
    "parse_scenario",
    "parse_scenario_text",
    "run_simulation",
    "run_suite",
]
