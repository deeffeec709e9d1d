import numpy as np
import pytest

from biphoton.detection import DetectorSpec
from biphoton.propagation import DispersionBudget
from biphoton.spectral import CrystalSpec

# lab-unit conversions used throughout the tests
PS_PER_CM = 1e-10
S2_PER_CM = 1e2
MM = 1e-3

FIBRE_K2 = 3.2e-28 * S2_PER_CM
FIBRE_Z = 500.0
TOTAL_B = 2 * FIBRE_K2 * FIBRE_Z


@pytest.fixture(scope="session")
def thin_type2():
    return CrystalSpec.type2(0.4 * MM, 1.5 * PS_PER_CM)


@pytest.fixture(scope="session")
def type1_crystal():
    return CrystalSpec.type1(3.4 * MM, 5.9e-28 * S2_PER_CM)


@pytest.fixture(scope="session")
def fibre_budget():
    return DispersionBudget(((FIBRE_K2, FIBRE_Z), (FIBRE_K2, FIBRE_Z)))


@pytest.fixture(scope="session")
def detector():
    return DetectorSpec.from_combined(700e-12)


def dense_cosine_sum(omega, values, tau, chirp=0.0):
    """Trapezoid sum of F(w) exp(i chirp w^2 / 2) cos(w tau), evaluated directly."""
    weights = np.full(omega.size, omega[1] - omega[0])
    weights[[0, -1]] *= 0.5
    e = values * np.exp(0.5j * chirp * omega ** 2) * weights
    return np.array([np.sum(e * np.cos(omega * t)) for t in tau])
