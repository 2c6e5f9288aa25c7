import numpy as np
import pytest

from fracnorm.domain import DomainSpec, build_domain

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


def _prepared(kind, resolution, **kwargs):
    dom = build_domain(DomainSpec(kind, **kwargs), resolution)
    dom.distance_field()
    return dom


@pytest.fixture(scope="session")
def square12():
    return _prepared("unit_square", 12)


@pytest.fixture(scope="session")
def square16():
    return _prepared("unit_square", 16)


@pytest.fixture(scope="session")
def square32():
    return _prepared("unit_square", 32)


@pytest.fixture(scope="session")
def square64():
    return _prepared("unit_square", 64)


@pytest.fixture(scope="session")
def disk32():
    return _prepared("disk", 32, radius=1.0)


@pytest.fixture(scope="session")
def cusp32():
    return _prepared("power_cusp", 32, gamma=2.0)


@pytest.fixture(scope="session")
def lshape32():
    return _prepared("l_shape", 32)


@pytest.fixture(scope="session")
def cusp64():
    return _prepared("power_cusp", 64, gamma=2.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)
