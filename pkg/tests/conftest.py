import sys

import numpy as np
import pytest

from losslandscape.data import make_split
from losslandscape.models import build, mlp_spec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def moons():
    return make_split("two-moons", 128, 128, 0.1, 0)


@pytest.fixture(scope="session")
def small_mlp():
    return build(mlp_spec(2, 2, depth=2, width=6), seed=3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
