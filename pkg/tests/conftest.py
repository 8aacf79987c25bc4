import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from acceptance_log import LINES  # noqa: E402
from scsar.synthesis import ClusterParams, SyntheticSpec, generate  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def three_bands():
    params = [
        ClusterParams((2.0, -1.0), 0.03, 0.5),
        ClusterParams((-1.0, 3.0), 0.00, 0.5),
        ClusterParams((0.0, 1.0), 0.05, 0.5),
    ]
    return generate(SyntheticSpec(params, shape=(15, 15), seed=7))
