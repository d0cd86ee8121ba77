import numpy as np
import pytest

from blochdd import RateModel, catalogue_lookup, make_delta


@pytest.fixture
def delta_pi():
    return make_delta(np.pi)


@pytest.fixture
def delta_pi2():
    return make_delta(np.pi / 2.0)


@pytest.fixture
def gauss_pi():
    return catalogue_lookup("G_0.10_pi")


@pytest.fixture
def nmr_model():
    return RateModel.nmr(0.05, 0.03, B=(0.002, -0.001, 0.004))


@pytest.fixture
def generic_model():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(3, 3))
    return RateModel(0.1 * (a @ a.T), B=(0.04, -0.02, 0.07))
