import math

import pytest

from iwcsim.config import ScenarioConfig
from iwcsim.scene import build_grid_network

# acceptance verdict lines, printed once at the end of the session
CRITERIA_LINES: list[str] = []


def record_criterion(label: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    CRITERIA_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def net():
    return build_grid_network()


@pytest.fixture
def small_cfg():
    """A short, light scenario for behavioural smoke tests."""
    cfg = ScenarioConfig()
    cfg.pedestrians.count = 60
    cfg.simulation.steps = 300
    return cfg


def finite(x):
    return x is not None and math.isfinite(x)
