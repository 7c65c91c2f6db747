import numpy as np
import pytest

from torus_hartree import GaussianPotential, TorusLattice

# V-hat(0) for the unit gaussian, (2 pi)^{3/2}; frozen reference value
B_GAUSS = 15.749609945722419


@pytest.fixture(scope="session")
def gaussian():
    return GaussianPotential()


@pytest.fixture
def small_lattice():
    return TorusLattice(4.0, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
