import numpy as np
import pytest

from quadctrl import (
    DEFAULT_Q_DIAGONAL,
    DEFAULT_R_DIAGONAL,
    LqrWeights,
    QuadrotorParams,
    hover_jacobians,
    lqr_gain,
)


@pytest.fixture(scope="session")
def params():
    return QuadrotorParams()


@pytest.fixture(scope="session")
def hover_ss(params):
    return hover_jacobians(params)


@pytest.fixture(scope="session")
def default_weights():
    return LqrWeights.from_diagonals(DEFAULT_Q_DIAGONAL, DEFAULT_R_DIAGONAL)


@pytest.fixture(scope="session")
def default_gain(hover_ss, default_weights):
    return lqr_gain(hover_ss.A, hover_ss.B, default_weights)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
