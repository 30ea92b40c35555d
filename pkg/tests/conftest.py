import pytest

from eqscm import load_builtin


@pytest.fixture(scope="session")
def mapk1():
    return load_builtin("mapk-exp1")


@pytest.fixture(scope="session")
def igf():
    return load_builtin("igf")


@pytest.fixture(scope="session")
def toy():
    return load_builtin("toy")
