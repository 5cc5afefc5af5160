import numpy as np
import pytest

# filled by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def random_channel(rng, kx, ky, alpha=1.0):
    return rng.dirichlet(np.full(ky, alpha), size=kx)


@pytest.fixture
def bsc01():
    return np.array([[0.9, 0.1], [0.1, 0.9]])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
