import numpy as np
import pytest

from laxeuler.spectral import Grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid32():
    return Grid(32)


@pytest.fixture
def grid64():
    return Grid(64)


@pytest.fixture(scope="session")
def grid128():
    return Grid(128)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
