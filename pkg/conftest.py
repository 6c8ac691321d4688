import pytest

from divisorlab.arith import d_k_table
from divisorlab.models import SingularSeriesConfig


@pytest.fixture(scope="session")
def d1_table():
    return d_k_table(1, 1, 10_000)


@pytest.fixture(scope="session")
def d2_table():
    return d_k_table(2, 1, 10_000)


@pytest.fixture(scope="session")
def d3_table():
    return d_k_table(3, 1, 10_000)


@pytest.fixture(scope="session")
def small_cfg():
    return SingularSeriesConfig(q_max=50)
