import functools
import time

import pytest

from gridpv.cli import apply_variant
from gridpv.config import load_scenario
from gridpv.sim import run_scenario
from gridpv.tuning import tuned_gains

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def scenario_run(case: str, variant: str):
    """(cfg, trace, wall seconds including tuning) for a bundled case, cached per session."""
    cfg = apply_variant(load_scenario(case), variant)
    started = time.perf_counter()
    gains, _ = tuned_gains(cfg)
    trace = run_scenario(cfg, gains=gains)
    return cfg, trace, time.perf_counter() - started


@pytest.fixture(scope="session")
def run_case():
    return scenario_run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
