"""Spectroscopic and magnetic-field parameter sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from qdcavity.core.constants import MU_B
from qdcavity.errors import InvalidParameterError

# Per-temperature resonances from the global reflectivity fit, lowest
# temperature first (μeV).
PUBLISHED_OMEGA_D = (1301940.0, 1301880.0, 1301770.0, 1301620.0, 1301370.0, 1300920.0)
PUBLISHED_OMEGA_C = (1302130.0, 1302140.0, 1302130.0, 1302110.0, 1302050.0, 1301930.0)

PUBLISHED_SHARED = {
    "Gamma_C": 172.0,
    "Gamma_D": 5.2,
    "g_C": 24.9,
    "phi": 1.13,
}
PUBLISHED_GAMMA_0 = 0.5

# Not reported in the source; used only to synthesize data.
DEFAULT_BG_SCALE = 10.0
DEFAULT_DELTA_OMEGA = -10.0


def wrap_phase(phi):
    """Map an angle onto [-pi, pi)."""
    return (phi + math.pi) % (2.0 * math.pi) - math.pi


def _require_finite(obj):
    for f in fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, float) and not math.isfinite(value):
            raise InvalidParameterError(f"{type(obj).__name__}.{f.name} must be finite, got {value}")


@dataclass(frozen=True)
class CavityDotParams:
    """Cavity and dot resonance parameters, all energies in μeV.

    ``Gamma_C`` and ``Gamma_D`` are half-widths (the Lorentzian FWHM is
    ``2 * Gamma``).  ``bg_scale`` is the lumped cavity in/out-coupling over
    background amplitude and carries μeV so that ``G * bg_scale`` is
    dimensionless.
    """

    omega_C: float = PUBLISHED_OMEGA_C[0]
    omega_D: float = PUBLISHED_OMEGA_D[0]
    Gamma_C: float = PUBLISHED_SHARED["Gamma_C"]
    Gamma_D: float = PUBLISHED_SHARED["Gamma_D"]
    g_C: float = PUBLISHED_SHARED["g_C"]
    phi: float = PUBLISHED_SHARED["phi"]
    bg_scale: float = DEFAULT_BG_SCALE
    delta_omega: float = DEFAULT_DELTA_OMEGA
    Gamma_0: float = PUBLISHED_GAMMA_0

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))
        _require_finite(self)
        if self.Gamma_C <= 0 or self.Gamma_D <= 0:
            raise InvalidParameterError("Gamma_C and Gamma_D must be positive")
        if self.g_C < 0:
            raise InvalidParameterError("g_C must be non-negative")
        if self.Gamma_0 <= 0:
            raise InvalidParameterError("Gamma_0 must be positive")
        if self.bg_scale < 0:
            raise InvalidParameterError("bg_scale must be non-negative")
        if not -math.pi <= self.phi < math.pi:
            raise InvalidParameterError(f"phi must lie in [-pi, pi), got {self.phi}")

    @classmethod
    def published(cls, index=0, **overrides):
        """Fitted parameters for the ``index``-th temperature of the series."""
        base = dict(PUBLISHED_SHARED, omega_C=PUBLISHED_OMEGA_C[index], omega_D=PUBLISHED_OMEGA_D[index])
        base.update(overrides)
        return cls(**base)

    @property
    def detuning(self):
        """Cavity minus dot energy (μeV)."""
        return self.omega_C - self.omega_D

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class MagneticFieldConfig:
    """Voigt-geometry field and g-factors.

    The g-factor defaults are typical InAs values, not measured ones.
    """

    B_x: float = 0.0
    g_electron: float = 0.4
    g_hole: float = 0.2

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))
        _require_finite(self)
        if self.B_x < 0:
            raise InvalidParameterError("B_x must be non-negative")

    @property
    def electron_splitting(self):
        return self.g_electron * MU_B * self.B_x

    @property
    def hole_splitting(self):
        return self.g_hole * MU_B * self.B_x
