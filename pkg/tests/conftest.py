import pytest

from sawqed import materials


@pytest.fixture(scope="session")
def catalog():
    return materials.builtin_catalog()


@pytest.fixture(scope="session")
def gaas(catalog):
    return materials.get(catalog, "GaAs")


@pytest.fixture(scope="session")
def diamond(catalog):
    return materials.get(catalog, "diamond")


@pytest.fixture(scope="session")
def algaas(catalog):
    return materials.get(catalog, "Al0.3Ga0.7As")


@pytest.fixture(scope="session")
def linbo3(catalog):
    return materials.get(catalog, "LiNbO3")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
