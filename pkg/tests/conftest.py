import numpy as np
import pytest

from ibf.core import FilterParams


@pytest.fixture
def rng():
    return np.random.default_rng(20100607)


@pytest.fixture
def fig2():
    """Three elements in a 32-bit filter split into four 7-bit regions."""
    params = FilterParams(m=32, k=3, r=4)
    return params, {"x": [0, 8, 15], "y": [1, 9, 22], "z": [2, 9, 23]}


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
