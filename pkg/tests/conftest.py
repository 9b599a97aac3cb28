import pytest

from optospin.params import ParamSet


@pytest.fixture(scope="session")
def params():
    return ParamSet.load()


@pytest.fixture(scope="session")
def device(params):
    return params.device


@pytest.fixture(scope="session")
def spin(params):
    return params.spin
