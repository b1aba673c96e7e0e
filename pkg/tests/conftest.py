import numpy as np
import pytest

from lincvx import domains

CRESCENT = ["max",
            ["add", ["mul", "x1", "x1"], ["mul", "y1", "y1"], -1],
            ["sub", 0.55, ["add", ["pow", ["sub", "x1", 0.6], 2], ["mul", "y1", "y1"]]]]

# Filled by the acceptance suite, printed after the run.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ball():
    return domains.ball(1.0)


@pytest.fixture(scope="session")
def model():
    return domains.model_e(1.0, 0.5)


@pytest.fixture(scope="session")
def crescent():
    return domains.custom(CRESCENT, (-0.7, 0.0), 1.0, shell_width=0.5)


@pytest.fixture(scope="session")
def ellipsoid():
    return domains.ellipsoid(1.0, 0.8, 1.3, 0.6)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
