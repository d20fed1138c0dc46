import numpy as np
import pytest


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def direct_dft(x):
    """O(M^2) reference with the 1/M normalization."""
    M = len(x)
    m = np.arange(M)
    return np.array([np.sum(x * np.exp(-2j * np.pi * j * m / M)) for j in range(M)]) / M


def direct_inverse_dft(X):
    M = len(X)
    j = np.arange(M)
    return np.array([np.sum(X * np.exp(2j * np.pi * j * m / M)) for m in range(M)])


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
