import math

import numpy as np
import pytest

from core.config import SweepConfig
from modules.keyrate import SystemParams
from modules.traces import synthesize_trace

LOW_NOISE_LINK = dict(f_rec=0.95, eta_b=0.5, nu_b=0.01, attenuation_db_per_km=0.2,
            xi_const=0.01, xi_slope=0.01)


@pytest.fixture
def link_params():
    """Factory for the nu_b = 0.01 operating point at (v_a, length_km)."""
    def make(v_a=4.0, length_km=50.0, **changes):
        values = dict(LOW_NOISE_LINK, **changes)
        return SystemParams(v_a=v_a, length_km=length_km, **values)
    return make


@pytest.fixture
def small_sweep_config():
    """A sweep that runs in well under a second."""
    config = SweepConfig()
    config.distances = [5.0, 25.0, 50.0]
    config.grid_size = 32
    config.refine_iterations = 40
    config.workers = 2
    return config


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture(scope='session')
def mixed_trace():
    """5e6 samples, AR(1) phi = 0.3 electrical noise at QCNR 5.5 dB, unquantized."""
    return synthesize_trace(n=5_000_000, sigma_e2=1.0, phi=0.3, qcnr_db=5.5, seed=11)


@pytest.fixture(scope='session')
def electrical_trace():
    """Same phi and seed family as mixed_trace with the LO off."""
    return synthesize_trace(n=5_000_000, sigma_e2=1.0, phi=0.3, qcnr_db=-math.inf, seed=11)


@pytest.fixture(scope='session')
def white_trace():
    return synthesize_trace(n=5_000_000, sigma_e2=1.0, phi=0.0, qcnr_db=-math.inf, seed=3)
