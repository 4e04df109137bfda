"""Hyperbolic-secant optical pulses."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from qdcavity.core.constants import HBAR
from qdcavity.core.levels import POLARIZATIONS
from qdcavity.errors import CalibrationError, InvalidParameterError

FWHM_FACTOR = 2.0 * math.acosh(2.0)  # sech FWHM * bandwidth


@dataclass(frozen=True)
class SechPulse:
    """Envelope ``rabi_peak * sech(bandwidth * (t - center_time))``.

    ``rabi_peak`` and ``bandwidth`` are angular frequencies (ps⁻¹);
    ``detuning`` is the carrier offset from the mean transition (μeV).
    A pulse with ``rabi_peak == bandwidth`` is a 2π pulse on the bright
    transition of the Λ system.
    """

    rabi_peak: float
    bandwidth: float
    detuning: float = 0.0
    center_time: float = 0.0
    polarization: str = "circular_plus"

    def __post_init__(self):
        for name in ("rabi_peak", "bandwidth", "detuning", "center_time"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.bandwidth <= 0:
            raise InvalidParameterError("bandwidth must be positive")
        if self.polarization not in POLARIZATIONS:
            raise InvalidParameterError(f"unknown polarization {self.polarization!r}")

    @classmethod
    def from_fwhm(cls, fwhm, rabi_peak=None, **kwargs):
        """Build a pulse from its temporal intensity-envelope FWHM (ps).

        ``rabi_peak`` defaults to the 2π condition ``rabi_peak = bandwidth``.
        """
        if fwhm <= 0:
            raise InvalidParameterError("fwhm must be positive")
        sigma = FWHM_FACTOR / fwhm
        return cls(rabi_peak=sigma if rabi_peak is None else rabi_peak, bandwidth=sigma, **kwargs)

    @property
    def fwhm(self):
        return FWHM_FACTOR / self.bandwidth

    @property
    def area(self):
        """Time integral of the real envelope, π Ω₀ / σ."""
        return math.pi * self.rabi_peak / self.bandwidth

    @property
    def spectral_width(self):
        """ħσ in μeV."""
        return HBAR * self.bandwidth

    def replace(self, **changes):
        return replace(self, **changes)


def sech_envelope(pulse, t, transition_energy=0.0):
    """Complex field amplitude of ``pulse`` at time(s) ``t``.

    Returns ``Ω₀ sech(σ(t - t₀)) exp(-i ω t / ħ)`` with carrier energy
    ``ω = transition_energy + detuning``.  The default ``transition_energy=0``
    gives the amplitude in the frame rotating at the mean transition.
    """
    t = np.asarray(t, dtype=float)
    x = pulse.bandwidth * (t - pulse.center_time)
    # sech written via exp(-|x|) to avoid cosh overflow in the far tails
    ex = np.exp(-np.abs(x))
    sech = 2.0 * ex / (1.0 + ex * ex)
    carrier = np.exp(-1j * (transition_energy + pulse.detuning) * t / HBAR)
    return pulse.rabi_peak * sech * carrier


def sech_rotation_angle(bandwidth, detuning):
    """Spin rotation angle of a detuned 2π sech pulse.

    Parameters
    ----------
    bandwidth : float
        σ in ps⁻¹.
    detuning : float
        Carrier detuning from the transition in μeV; must be nonzero.

    Returns
    -------
    float
        ``φ = 2 arctan(ħσ/Δ)``; odd in Δ.  The pulse acts on the spin as
        ``exp(-i φ σ_z / 2)`` with σ_z = |b><b| - |d><d| for the bright and
        dark combinations, i.e. the bright state gains ``exp(-i φ)``.
    """
    if bandwidth <= 0:
        raise InvalidParameterError("bandwidth must be positive")
    if detuning == 0:
        raise CalibrationError("rotation angle undefined on resonance; integrate the dynamics instead")
    return 2.0 * math.atan(HBAR * bandwidth / detuning)


def bandwidth_for_rotation(angle, detuning):
    """Inverse of :func:`sech_rotation_angle`: σ (ps⁻¹) giving ``|angle|``."""
    if detuning == 0:
        raise CalibrationError("rotation angle undefined on resonance")
    if not 0 < abs(angle) < math.pi:
        raise CalibrationError("a 2π sech pulse rotates by less than π")
    return abs(detuning) * math.tan(abs(angle) / 2.0) / HBAR
