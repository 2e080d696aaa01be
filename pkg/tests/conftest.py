import numpy as np
import pytest

from onfcavity import GratingDesign

# Reference resonance rows: (N_in, lambda0, delta_lambda, R0, Q, kappa) per mode
SIM_ROWS_X = [(100, 639.33, 0.552, 0.595, 1158, 405),
                (180, 639.33, 0.167, 0.095, 3828, 122),
                (220, 639.33, 0.109, 0.004, 5870, 79)]
SIM_ROWS_Y = [(100, 640.38, 0.500, 0.453, 1280, 365),
                (180, 640.38, 0.146, 0.008, 4386, 107),
                (220, 640.38, 0.100, 0.200, 6404, 73)]
EXP_ROWS_X = [(100, 626.30, 0.83, 0.33, 754, 635),
                (140, 626.38, 0.47, 0.15, 1332, 358),
                (170, 626.20, 0.30, 0.02, 2087, 230)]


@pytest.fixture(scope="session")
def reference_design():
    """Calibrated design with the slat counts used for the mirror-length sweeps."""
    return GratingDesign(n_in_slats=150, n_out_slats=270)


@pytest.fixture(scope="session")
def lossless_design():
    return GratingDesign(n_in_slats=150, n_out_slats=150, slat_loss=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
