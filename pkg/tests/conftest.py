import pytest

from splitedge.formats import load_table1
from splitedge.model import ConstraintSet
from splitedge.profiler import build_cost_curves


@pytest.fixture(scope="session")
def table1():
    return load_table1()


@pytest.fixture(scope="session")
def curves(table1):
    return build_cost_curves(table1)


@pytest.fixture
def paper_caps():
    return ConstraintSet(tau=68.34, k_devices=2, w_max=(7.0, 7.0), m_max=(65.0, 65.0))
