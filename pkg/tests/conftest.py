import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from caphomog.material import ElasticTensor, make_params
from caphomog.mesh import build_cell_mesh, build_domain_mesh

settings.register_profile("repo", deadline=None, max_examples=40, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def iso():
    return ElasticTensor.from_isotropic(1.0, 1.0)


@pytest.fixture(scope="session")
def cap02():
    # gamma/(2 mu a) = 2, well inside the stable range
    return make_params(0.8, 100.0, 0.2)


@pytest.fixture(scope="session")
def cell1():
    return build_cell_mesh(0.2, 1)


@pytest.fixture(scope="session")
def cell2():
    return build_cell_mesh(0.2, 2)


@pytest.fixture(scope="session")
def box1():
    return build_domain_mesh(0.5, 0.2, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
