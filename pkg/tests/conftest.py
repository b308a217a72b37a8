import numpy as np
import pytest

from hcmu_surfaces import pipeline
from hcmu_surfaces.config import RunConfig

import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def flat_run():
    return pipeline.immerse(RunConfig(1.0, 0.0, c=0.0, A=0.01, s=0.25))


@pytest.fixture(scope="session")
def flat_run_a0():
    return pipeline.immerse(RunConfig(1.0, 0.0, c=0.0, A=0.0, s=0.25))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
