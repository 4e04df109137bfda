import math

import numpy as np
import pytest

from qdcavity.core import CavityDotParams, MagneticFieldConfig, build_level_system

N_DATASETS = 6
TRUTH_SHARED = {"g_C": 24.9, "Gamma_C": 172.0, "Gamma_D": 5.2, "phi": 1.13, "amplitude": 1.0}


@pytest.fixture(scope="session")
def published():
    return CavityDotParams()


@pytest.fixture(scope="session")
def published_series():
    return [CavityDotParams.published(i) for i in range(N_DATASETS)]


@pytest.fixture(scope="session")
def rotation_system(published):
    """2 T Voigt system with a 45° dipole axis and free-space decay."""
    return build_level_system(MagneticFieldConfig(2.0), published.omega_D, math.pi / 4, published.Gamma_0)


@pytest.fixture(scope="session")
def lossless_system(published):
    return build_level_system(MagneticFieldConfig(2.0), published.omega_D, math.pi / 4, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
