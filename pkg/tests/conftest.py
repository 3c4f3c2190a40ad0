import numpy as np
import pytest

from steinpairs.limitdist import GFunction, normalize


@pytest.fixture(scope="session")
def normal01():
    return normalize(GFunction.linear(1.0))


@pytest.fixture(scope="session")
def quartic():
    # critical Curie-Weiss limit for Rademacher spins: g(x) = x^3 / 3
    return normalize(GFunction.power(3, 1.0 / 3.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
