import numpy as np
import pytest


def pair_tensor(s1, s2):
    """Single-feature N=2 tensor from two series."""
    return np.stack([np.asarray(s1, float), np.asarray(s2, float)], axis=1)[:, None, :]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
