"""Four-level Voigt-geometry level structure of a singly charged dot.

State ordering used throughout the package::

    0  g0   electron ground state, energy -δ_e/2
    1  g1   electron ground state, energy +δ_e/2
    2  t2   trion state,  energy ω_D - δ_h/2
    3  t3   trion state,  energy ω_D + δ_h/2

Each trion couples to both ground states, forming two Λ systems.  The
"outer" transitions (g1-t2, g0-t3) are linearly polarized along the dot
axis θ, the "inner" ones (g0-t2, g1-t3) along θ + π/2 with a -i phase, so
that a circularly polarized pulse drives a single bright spin combination
(g0 + g1)/√2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from qdcavity.core.params import MagneticFieldConfig
from qdcavity.errors import InvalidParameterError

N_LEVELS = 4
GROUND = (0, 1)
TRION = (2, 3)

# Jones vectors in the (V, H) basis; V is the cavity polarization axis.
POLARIZATIONS = {
    "V": np.array([1.0, 0.0], dtype=complex),
    "H": np.array([0.0, 1.0], dtype=complex),
    "circular_plus": np.array([1.0, 1.0j]) / math.sqrt(2.0),
    "circular_minus": np.array([1.0, -1.0j]) / math.sqrt(2.0),
}


def polarization_vector(polarization):
    """Jones vector for a named polarization, or pass through a 2-vector."""
    if isinstance(polarization, str):
        try:
            return POLARIZATIONS[polarization]
        except KeyError:
            raise InvalidParameterError(f"unknown polarization {polarization!r}") from None
    vec = np.asarray(polarization, dtype=complex)
    if vec.shape != (2,):
        raise InvalidParameterError("polarization vector must have shape (2,)")
    return vec


@dataclass(frozen=True)
class Transition:
    lower_index: int
    upper_index: int
    energy: float  # μeV, absolute
    polarization_angle: float  # rad, relative to the cavity V axis
    decay_rate: float  # μeV, amplitude half-width of this branch
    kind: str  # "outer" or "inner"

    @property
    def dipole(self):
        """Complex Jones vector of the transition dipole."""
        phase = 1.0 if self.kind == "outer" else -1.0j
        a = self.polarization_angle
        return phase * np.array([math.cos(a), math.sin(a)], dtype=complex)

    def coupling(self, polarization):
        """Projection of a field polarization onto this transition.

        Normalized so a circular field couples each of the four
        transitions with magnitude 1/2.
        """
        return complex(self.dipole @ polarization_vector(polarization)) / math.sqrt(2.0)

    def cavity_weight(self):
        """cos² of the angle between the dipole and the cavity axis."""
        return abs(self.dipole[0]) ** 2


@dataclass(frozen=True)
class LevelSystem:
    ground_splitting: float
    trion_splitting: float
    transition_energy: float
    dipole_axis_angle: float
    transitions: tuple

    def __post_init__(self):
        if len(self.transitions) != 4:
            raise InvalidParameterError("a LevelSystem has exactly 4 transitions")

    def level_energies(self, frame=None):
        """Level energies (μeV) relative to ``frame`` (default: mean transition)."""
        frame = self.transition_energy if frame is None else frame
        de, dh = self.ground_splitting, self.trion_splitting
        w = self.transition_energy - frame
        return np.array([-de / 2, de / 2, w - dh / 2, w + dh / 2])

    @property
    def outer(self):
        return tuple(k for k, tr in enumerate(self.transitions) if tr.kind == "outer")

    @property
    def inner(self):
        return tuple(k for k, tr in enumerate(self.transitions) if tr.kind == "inner")

    def find(self, lower, upper):
        for k, tr in enumerate(self.transitions):
            if tr.lower_index == lower and tr.upper_index == upper:
                return k
        raise KeyError((lower, upper))

    def total_decay(self, upper):
        """Sum of branch half-widths out of trion ``upper`` (μeV)."""
        return sum(tr.decay_rate for tr in self.transitions if tr.upper_index == upper)

    def with_decay_rates(self, rates):
        rates = list(rates)
        if len(rates) != 4 or any(r < 0 for r in rates):
            raise InvalidParameterError("need 4 non-negative decay rates")
        return replace(
            self,
            transitions=tuple(replace(tr, decay_rate=float(r)) for tr, r in zip(self.transitions, rates)),
        )

    def without_splitting(self):
        """Same dipoles and rates with Zeeman splittings switched off."""
        return replace(
            self,
            ground_splitting=0.0,
            trion_splitting=0.0,
            transitions=tuple(replace(tr, energy=self.transition_energy) for tr in self.transitions),
        )

    def with_ground_shift(self, shift):
        """Add ``shift`` (μeV) to the ground splitting, e.g. an Overhauser field."""
        de = self.ground_splitting + shift
        energies = self.level_energies(frame=0.0)
        energies[0], energies[1] = -de / 2, de / 2
        return replace(
            self,
            ground_splitting=de,
            transitions=tuple(
                replace(tr, energy=float(energies[tr.upper_index] - energies[tr.lower_index]))
                for tr in self.transitions
            ),
        )


def build_level_system(field, transition_energy, dipole_axis_angle=0.0, Gamma_0=0.5):
    """Construct the four-transition Voigt level system.

    Parameters
    ----------
    field : MagneticFieldConfig
        In-plane field and g-factors; sets the electron and hole splittings.
    transition_energy : float
        Mean optical transition energy ω_D (μeV).
    dipole_axis_angle : float
        Linear polarization axis of the dot relative to the cavity V axis.
    Gamma_0 : float
        Free-space radiative half-width (μeV); split equally over the two
        branches of each trion.

    Returns
    -------
    LevelSystem
    """
    if not isinstance(field, MagneticFieldConfig):
        raise InvalidParameterError("field must be a MagneticFieldConfig")
    for name, value in (("transition_energy", transition_energy),
                        ("dipole_axis_angle", dipole_axis_angle), ("Gamma_0", Gamma_0)):
        if not math.isfinite(value):
            raise InvalidParameterError(f"{name} must be finite, got {value}")
    if Gamma_0 < 0:
        raise InvalidParameterError("Gamma_0 must be non-negative")

    de, dh = field.electron_splitting, field.hole_splitting
    w = float(transition_energy)
    theta = float(dipole_axis_angle)
    branch = Gamma_0 / 2.0
    transitions = (
        Transition(1, 2, w - (de + dh) / 2, theta, branch, "outer"),
        Transition(0, 2, w + (de - dh) / 2, theta + math.pi / 2, branch, "inner"),
        Transition(1, 3, w - (de - dh) / 2, theta + math.pi / 2, branch, "inner"),
        Transition(0, 3, w + (de + dh) / 2, theta, branch, "outer"),
    )
    return LevelSystem(de, dh, w, theta, transitions)
