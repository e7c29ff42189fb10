import numpy as np
import pytest

from rodflow.angular import CircleBasis, SphereBasis


@pytest.fixture(scope="session")
def circle():
    return CircleBasis(64)


@pytest.fixture(scope="session")
def sphere():
    return SphereBasis(10)


@pytest.fixture(scope="session")
def bases(circle, sphere):
    return {2: circle, 3: sphere}


def random_tracefree_symmetric(rng, d):
    a = rng.standard_normal((d, d))
    a = 0.5 * (a + a.T)
    return a - np.trace(a) / d * np.eye(d)
