import numpy as np
import pytest

from palab import instances, solvers


@pytest.fixture(scope="session")
def ex51():
    return instances.example_5_1(0.3)


@pytest.fixture(scope="session")
def ex51g(ex51):
    return ex51.to_generalized()


@pytest.fixture(scope="session")
def ex51_an(ex51g):
    return solvers.analyze(ex51g)


@pytest.fixture(scope="session")
def mb():
    return instances.theorem_3_7_instance(0.04)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
