import pytest

from hlsverify import suites


@pytest.fixture(scope="session")
def grid3():
    return suites.get_grid(3)


@pytest.fixture(scope="session")
def grid4():
    return suites.get_grid(4)


@pytest.fixture(scope="session")
def grid5():
    return suites.get_grid(5)


@pytest.fixture(scope="session")
def basis3():
    return suites.get_basis(3)


@pytest.fixture(scope="session")
def basis4():
    return suites.get_basis(4)


@pytest.fixture(scope="session")
def basis5():
    return suites.get_basis(5)
