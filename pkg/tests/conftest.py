import pytest
from hypothesis import settings

from seaforge.controllers import hinf3
from seaforge.loop import build_generalized_plant, close_loop
from seaforge.plant import default_plant, desired_impedance

settings.register_profile("seaforge", max_examples=60, deadline=None, derandomize=True)
settings.load_profile("seaforge")


@pytest.fixture(scope="session")
def plant():
    return default_plant()


@pytest.fixture(scope="session")
def G06(plant):
    return build_generalized_plant(plant, desired_impedance(plant, 0.6))


@pytest.fixture(scope="session")
def hinf_maps(G06):
    return close_loop(G06, hinf3())


ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
