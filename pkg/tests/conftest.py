import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

# 6x2 by 2x4 worked pair; V uses a=1, b=2, c=3, d=4
W_EX = np.array([[2.1, 1.1], [1, 2.3], [1, 1.1], [2.1, 1.1], [3, 2.3], [3, 4]])
V_EX = np.array([[1.0, 1, 2, 1], [3, 4, 4, 3]])

# 6x3 binary example with its encoding and value table
A_BIN = np.array([[0, 0, 1], [0, 1, 0], [1, 1, 0], [0, 0, 1], [1, 0, 0], [0, 1, 1]], dtype=float)
I_A = np.array([[0, 0, 0], [0, 1, 1], [1, 1, 1], [0, 0, 0], [1, 0, 1], [0, 1, 0]])
C_A = np.array([[0, 0, 1], [1, 1, 0]])


def sparse_matrix(rng, rows, cols, k, axis=0):
    """Matrix whose columns (axis=0) or rows (axis=1) have at most k distinct values."""
    levels = rng.normal(size=(k, cols) if axis == 0 else (rows, k))
    if axis == 0:
        idx = rng.integers(0, k, size=(rows, cols))
        return np.take_along_axis(levels, idx, axis=0)
    idx = rng.integers(0, k, size=(rows, cols))
    return np.take_along_axis(levels, idx, axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
