import numpy as np
import pytest

from multibubble.greens import BallDomain
from multibubble.interaction import Configuration
from multibubble.pde.sweep import sweep_epsilon

ACCEPTANCE_LINES = {}


def record(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


@pytest.fixture
def acceptance_record():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


# sweeps shared by several modules; each is a few seconds at most


@pytest.fixture(scope="session")
def sweep5_coarse():
    return sweep_epsilon(5, -1.0, np.geomspace(1e-2, 1e-4, 6))


@pytest.fixture(scope="session")
def sweep5_deep():
    return sweep_epsilon(5, -1.0, np.geomspace(1e-3, 1e-8, 6))


@pytest.fixture(scope="session")
def sweep4():
    return sweep_epsilon(4, -1.0, np.geomspace(1e-4, 1e-14, 6))


@pytest.fixture(scope="session")
def sweep6():
    return sweep_epsilon(6, -1.0, np.geomspace(1e-2, 1e-6, 6))


def random_configuration(rng, dim, n, radius=0.75, min_sep=0.15, max_tries=1000):
    """``n`` points uniformly in the ball of ``radius`` with pairwise distance >= min_sep."""
    pts = []
    for _ in range(max_tries):
        p = rng.normal(size=dim)
        p *= radius * rng.uniform() ** (1.0 / dim) / np.linalg.norm(p)
        if all(np.linalg.norm(p - q) >= min_sep for q in pts):
            pts.append(p)
            if len(pts) == n:
                return Configuration(np.array(pts))
    raise RuntimeError("could not place points")


@pytest.fixture
def unit_ball():
    return BallDomain.unit
