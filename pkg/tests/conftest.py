import numpy as np
import pytest


def naive_hadamard(n):
    """Orthonormal Sylvester matrix built by Kronecker products."""
    h = np.ones((1, 1))
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    while h.shape[0] < n:
        h = np.kron(h2, h)
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, echoed in the terminal summary
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
