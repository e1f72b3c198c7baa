import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nlc.spectral import Grid
from nlc.state import ModelParams, random_band_limited

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def g32():
    return Grid((32, 32))


@pytest.fixture(scope="session")
def g64():
    return Grid((64, 64))


@pytest.fixture
def params():
    return ModelParams()


def smooth(grid, seed=0, ncomp=1, kmax=4):
    """Band-limited random field (ncomp, *shape); the same seed gives the same function on any grid."""
    return random_band_limited(grid, np.random.default_rng(seed), ncomp, kmax)


def rel(a, b):
    return float(np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(b)))


ACCEPTANCE_LINES: list[str] = []


def verdict(label: str, ok: bool, detail: str) -> None:
    """Print and record one acceptance line, then assert it."""
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
