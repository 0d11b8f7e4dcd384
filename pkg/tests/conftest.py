import pytest

from src.oppcost.graph import example_graph
from src.oppcost.household import HouseholdModel, make_capital_grid


@pytest.fixture
def example():
    return example_graph()


@pytest.fixture
def brock_mirman():
    return HouseholdModel(beta=0.95, delta=1.0, alpha=0.3, A=1.0)


@pytest.fixture
def small_grid(brock_mirman):
    return make_capital_grid(brock_mirman, n=101)
