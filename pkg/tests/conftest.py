import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fekete_rate import GreenKernel, ModelSurface  # noqa: E402


@pytest.fixture(scope="session")
def torus():
    return ModelSurface.torus(1j)


@pytest.fixture(scope="session")
def sphere():
    return ModelSurface.sphere()


@pytest.fixture(scope="session")
def torus_kernel(torus):
    return GreenKernel(torus)


@pytest.fixture(scope="session")
def sphere_kernel(sphere):
    return GreenKernel(sphere)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
