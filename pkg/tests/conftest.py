import numpy as np
import pytest

from causalfluid.coefficients import DissipationCoeffs
from causalfluid.kinematics import FluidState
from causalfluid.thermo import GasParams, eos_from_n_theta


@pytest.fixture
def params():
    return GasParams(m=1.0, gamma=4.0 / 3.0, s0=0.0)


@pytest.fixture
def s0(params):
    """The reference state n = theta = 1."""
    return eos_from_n_theta(params, 1.0, 1.0)


@pytest.fixture
def rest(s0):
    return FluidState.moving(s0)


@pytest.fixture
def coeffs():
    return DissipationCoeffs(eta=1.0, zeta=0.0, chi=1.0, mu=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
