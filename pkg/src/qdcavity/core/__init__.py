"""Domain types, constants, level structure and pulse definitions."""
from qdcavity.core.constants import CONSTANTS, HBAR, MU_B, PhysicalConstants
from qdcavity.core.levels import (
    GROUND,
    N_LEVELS,
    POLARIZATIONS,
    TRION,
    LevelSystem,
    Transition,
    build_level_system,
    polarization_vector,
)
from qdcavity.core.params import (
    PUBLISHED_GAMMA_0,
    PUBLISHED_OMEGA_C,
    PUBLISHED_OMEGA_D,
    PUBLISHED_SHARED,
    CavityDotParams,
    MagneticFieldConfig,
    wrap_phase,
)
from qdcavity.core.pulses import (
    FWHM_FACTOR,
    SechPulse,
    bandwidth_for_rotation,
    sech_envelope,
    sech_rotation_angle,
)
from qdcavity.core.state import DensityMatrix, state_violations

__all__ = [
    "CONSTANTS", "HBAR", "MU_B", "PhysicalConstants",
    "GROUND", "N_LEVELS", "POLARIZATIONS", "TRION", "LevelSystem", "Transition",
    "build_level_system", "polarization_vector",
    "PUBLISHED_GAMMA_0", "PUBLISHED_OMEGA_C", "PUBLISHED_OMEGA_D", "PUBLISHED_SHARED",
    "CavityDotParams", "MagneticFieldConfig", "wrap_phase",
    "FWHM_FACTOR", "SechPulse", "bandwidth_for_rotation", "sech_envelope", "sech_rotation_angle",
    "DensityMatrix", "state_violations",
]
