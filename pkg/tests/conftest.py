import numpy as np
import pytest

from qmeasure import operators as ops
from qmeasure import stern_gerlach as sg


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def default_params():
    return sg.SgParams()


@pytest.fixture(scope="session")
def corrected_params():
    return sg.SgParams(variant="corrected")


@pytest.fixture(scope="session")
def quadrupole_povm():
    return sg.extract_spin_povm(sg.SgParams(variant="quadrupole"))


@pytest.fixture(scope="session")
def corrected_calibration(corrected_params):
    return sg.calibrate(corrected_params)


@pytest.fixture(scope="session")
def corrected_povm(corrected_params):
    return sg.extract_spin_povm(corrected_params)


@pytest.fixture(scope="session")
def pvm_y():
    return ops.pauli_pvm("y")


@pytest.fixture(scope="session")
def pvm_z():
    return ops.pauli_pvm("z")
