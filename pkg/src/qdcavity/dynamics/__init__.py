"""Master-equation dynamics: pumping, Ramsey fringes, Rabi and rotation scans."""
from qdcavity.dynamics.cavity_field import FilteredField, cavity_filtered_field, pulse_only, symmetrized_green
from qdcavity.dynamics.decay import modified_decay_rate, with_cavity_decay
from qdcavity.dynamics.fringes import FringeFit, decaying_cosine, fit_decaying_cosine
from qdcavity.dynamics.integrator import OdeSolution, dopri5
from qdcavity.dynamics.lindblad import (
    NO_DRIVE,
    DriveComponent,
    DriveField,
    Generator,
    Trajectory,
    apply_superop,
    decay_channels,
    evolve,
    lindblad_rhs,
    propagator,
)
from qdcavity.dynamics.pumping import DEFAULT_T1, PumpingResult, simulate_pumping
from qdcavity.dynamics.rabi import DEFAULT_AREA_DECAY, AngleCalibration, RabiScan, rabi_scan
from qdcavity.dynamics.ramsey import (
    InstantaneousPulse,
    RamseySeries,
    nuclear_sigma_for,
    readout_vector,
    simulate_ramsey,
    t2_star,
)
from qdcavity.dynamics.rotation import DEFAULT_COUPLING_SCALE, RotationScan, rotate_once, rotation_scan
from qdcavity.dynamics.spin import (
    BRIGHT,
    DARK,
    branching,
    fidelity_purity,
    readout_population,
    rotated_spin,
    rotation_superop,
    spin_state,
)

__all__ = [
    "FilteredField", "cavity_filtered_field", "pulse_only", "symmetrized_green",
    "modified_decay_rate", "with_cavity_decay",
    "FringeFit", "decaying_cosine", "fit_decaying_cosine",
    "OdeSolution", "dopri5",
    "NO_DRIVE", "DriveComponent", "DriveField", "Generator", "Trajectory", "apply_superop",
    "decay_channels", "evolve", "lindblad_rhs", "propagator",
    "DEFAULT_T1", "PumpingResult", "simulate_pumping",
    "DEFAULT_AREA_DECAY", "AngleCalibration", "RabiScan", "rabi_scan",
    "InstantaneousPulse", "RamseySeries", "nuclear_sigma_for", "readout_vector", "simulate_ramsey",
    "t2_star",
    "DEFAULT_COUPLING_SCALE", "RotationScan", "rotate_once", "rotation_scan",
    "BRIGHT", "DARK", "branching", "fidelity_purity", "readout_population", "rotated_spin",
    "rotation_superop", "spin_state",
]
