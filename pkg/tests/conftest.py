"""Shared fixtures plus the acceptance-summary section printed after a run."""

import sys

import pytest

from naklab import MiningParams

TOTAL_RATE = 1.0 / 600.0
DELAY = 10.0


@pytest.fixture(scope="session")
def btc25():
    """600 s expected block interval, 10 s delay bound, 25% adversary."""
    return MiningParams.from_split(0.25, TOTAL_RATE, DELAY)


@pytest.fixture(scope="session")
def btc20():
    return MiningParams.from_split(0.20, TOTAL_RATE, DELAY)


@pytest.fixture(scope="session")
def btc10():
    return MiningParams.from_split(0.10, TOTAL_RATE, DELAY)


@pytest.fixture(scope="session")
def fast25():
    """13 s block interval, 2 s delay bound: a faster-chain regime."""
    return MiningParams.from_split(0.25, 1.0 / 13.0, 2.0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
