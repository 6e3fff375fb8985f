"""Shared fixtures: the synthetic records every test module leans on.

Session scope keeps the expensive draws (the 2 s workhorse trace is 1e7
samples) to one synthesis each per run.
"""
import numpy as np
import pytest

from rhet import default_thermal_config, synth_gaussian_trace
from rhet.core import TWO_PI, TimeTrace


@pytest.fixture(scope="session")
def thermal_cfg():
    return default_thermal_config()


@pytest.fixture(scope="session")
def trace42(thermal_cfg):
    # 2 s at 5 MS/s, the acceptance workhorse record
    return synth_gaussian_trace(thermal_cfg, 2.0, 2e-7, seed=42)


@pytest.fixture(scope="session")
def short_trace(thermal_cfg):
    # cheap record for module-level plumbing tests
    return synth_gaussian_trace(thermal_cfg, 0.25, 2e-7, seed=7)


@pytest.fixture(scope="session")
def noise_trace():
    """White-noise record with an irrational number of samples per filter
    period, so no discretization conspiracies can hide in the oracles."""
    omega_beat = TWO_PI * 1.0e4
    dt = (TWO_PI / omega_beat) / 24.6180339887
    rng = np.random.default_rng(123)
    return TimeTrace(samples=rng.standard_normal(4096), dt=dt,
                     omega_beat=omega_beat, theta_nominal=0.0)
