# tests/conftest.py

import pytest

from finslab import operations
from finslab.catalog import catalog_get
from finslab.classifiers import SampleGrid
from finslab.schemas import GridSpec


@pytest.fixture(autouse=True)
def clean_caches():
    # métricas recriadas em cada teste não podem herdar pacotes em cache
    operations.reset_caches()
    yield
    operations.reset_caches()


@pytest.fixture
def small_grid_spec():
    return GridSpec(x_points=8, y_directions=8, seed=0)


@pytest.fixture
def square_metric():
    return catalog_get("square")


@pytest.fixture
def funk_metric():
    return catalog_get("funk_type", {"n": 2})


@pytest.fixture
def small_grid(small_grid_spec):
    def build(M):
        return SampleGrid.build(M, small_grid_spec)

    return build
