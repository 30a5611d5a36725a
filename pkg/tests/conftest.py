import pytest

from lpspace.constructor import build
from lpspace.model import NAMED_SYSTEMS, make_params

MU_SE = NAMED_SYSTEMS["sun-earth"]
MU_EM = NAMED_SYSTEMS["earth-moon"]


@pytest.fixture(scope="session")
def se_l1_params():
    return make_params(MU_SE, "L1", n_max=20)


@pytest.fixture(scope="session")
def em_l1_params():
    return make_params(MU_EM, "L1", n_max=12)


@pytest.fixture(scope="session")
def se_l1_order3(se_l1_params):
    return build(se_l1_params, 3, check=True)


@pytest.fixture(scope="session")
def se_l1_order5(se_l1_params):
    return build(se_l1_params, 5, check=True)


@pytest.fixture(scope="session")
def se_l1_order9(se_l1_params):
    return build(se_l1_params, 9)


@pytest.fixture(scope="session")
def em_l1_order5(em_l1_params):
    return build(em_l1_params, 5, check=True)
