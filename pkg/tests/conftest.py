import pytest

from ergodic_leverage.analytics import MarketModel
from ergodic_leverage.simulate import rebalancing_bias

ACCEPTANCE_LINES: list[str] = []

BASE = MarketModel(0.05, 0.05, 0.18)
VOLATILE = MarketModel(0.0, 0.05, 0.45)


@pytest.fixture(scope="session")
def base_bias():
    """Rebalancing bias at leverage 1.5432 for dt = 1/64, 1/128, 1/256 on shared noise."""
    return rebalancing_bias(BASE, 1.5432, 100.0, n_paths=10_000, seed=0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
