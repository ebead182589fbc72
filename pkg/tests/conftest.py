import pytest

from bispade import ModeSpace, SchmidtModel


@pytest.fixture(scope="session")
def model015():
    return SchmidtModel.from_gamma(0.15)


@pytest.fixture(scope="session")
def model_gauss():
    return SchmidtModel.from_gamma(1.0)


@pytest.fixture(scope="session")
def space7():
    return ModeSpace.grid()
