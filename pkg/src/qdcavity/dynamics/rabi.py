"""Ramsey fringe amplitude versus rotation-pulse power.

Power is expressed in units of the power of a π/2 pulse, so the peak Rabi
frequency is ``Ω_{π/2} √power``.  The rotation angle of a pulse is
calibrated without Zeeman precession from the bright/dark coherence it
creates: starting in a ground eigenstate, a rotation by θ about the
optical axis leaves ``2⟨b|ρ|d⟩ = e^{-iθ}``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from qdcavity.core.constants import HBAR
from qdcavity.core.state import DensityMatrix
from qdcavity.dynamics.cavity_field import pulse_only
from qdcavity.dynamics.fringes import fit_decaying_cosine
from qdcavity.dynamics.lindblad import evolve
from qdcavity.dynamics.ramsey import PULSE_TAIL, InstantaneousPulse, simulate_ramsey
from qdcavity.dynamics.spin import BRIGHT, DARK
from qdcavity.errors import CalibrationError, InvalidParameterError, SimulationWarning

# Not published: damping of the fringe amplitude per radian of pulse area.
DEFAULT_AREA_DECAY = 3.0 * math.pi
_LADDER_STEP = 0.1  # rabi_peak ladder spacing in units of the bandwidth


@dataclass
class RabiPoint:
    power: float
    rabi_peak: float
    area: float  # calibrated rotation angle, rad
    raw_amplitude: float
    amplitude: float


@dataclass
class RabiScan:
    points: list
    rabi_pi_half: float
    warnings: list = field(default_factory=list)

    @property
    def power(self):
        return np.array([pt.power for pt in self.points])

    @property
    def area(self):
        return np.array([pt.area for pt in self.points])

    @property
    def amplitude(self):
        return np.array([pt.amplitude for pt in self.points])


def _raw_angle(system, pulse, tol):
    if pulse.rabi_peak == 0:
        return 0.0
    span = (-PULSE_TAIL / pulse.bandwidth, PULSE_TAIL / pulse.bandwidth)
    rho = evolve(DensityMatrix.basis(0), system.without_splitting(), pulse_only(pulse), span,
                 tol=tol, max_step=0.5 / pulse.bandwidth).final
    coherence = BRIGHT.conj() @ rho[:2, :2] @ DARK
    return -float(np.angle(2.0 * coherence))


class AngleCalibration:
    """Continuous rotation angle versus peak Rabi frequency for one pulse shape.

    Angles are unwrapped along a ladder of Rabi frequencies starting near
    zero, where the rotation vanishes; :meth:`rabi_for` inverts the curve
    by root finding between ladder points.
    """

    def __init__(self, system, pulse, tol=1e-9):
        self.system = system
        self.pulse = pulse.replace(center_time=0.0)
        self.tol = tol
        self._rabi = [0.0]
        self._angle = [0.0]

    def _extend(self):
        rabi = self._rabi[-1] + _LADDER_STEP * self.pulse.bandwidth
        raw = _raw_angle(self.system, self.pulse.replace(rabi_peak=rabi), self.tol)
        prev = self._angle[-1]
        self._rabi.append(rabi)
        self._angle.append(prev + (raw - prev + math.pi) % (2 * math.pi) - math.pi)

    def angle(self, rabi):
        """Unwrapped angle at ``rabi`` (ps⁻¹), continued from the nearest ladder point."""
        while self._rabi[-1] < rabi:
            self._extend()
        k = int(np.searchsorted(self._rabi, rabi))
        ref = self._angle[max(k - 1, 0)]
        raw = _raw_angle(self.system, self.pulse.replace(rabi_peak=rabi), self.tol)
        return ref + (raw - ref + math.pi) % (2 * math.pi) - math.pi

    def rabi_for(self, area, max_rabi=None):
        """Smallest peak Rabi frequency whose |angle| reaches ``area``."""
        if area <= 0:
            raise CalibrationError("area must be positive")
        max_rabi = 20.0 * self.pulse.bandwidth if max_rabi is None else max_rabi
        k = 1
        while True:
            while len(self._rabi) <= k:
                if self._rabi[-1] >= max_rabi:
                    raise CalibrationError(f"rotation angle {area:.3g} rad not reached below "
                                           f"rabi_peak {max_rabi:.3g} ps⁻¹")
                self._extend()
            if abs(self._angle[k]) >= area:
                break
            k += 1
        lo, hi = self._rabi[k - 1], self._rabi[k]
        return brentq(lambda w: abs(self.angle(w)) - area, lo, hi, xtol=1e-10 * hi)


def _default_tau(system, half):
    omega_l = system.ground_splitting / HBAR
    period = 2 * math.pi / omega_l
    start = 2 * half + 0.25 * period
    return start + np.linspace(0.0, 5 * period, 81)


def rabi_scan(system, p, pulse_template, power_grid, tau_grid=None, *,
              area_decay=DEFAULT_AREA_DECAY, nuclear_sigma=0.0, n_samples=1, seed=0,
              T1=None, coupling_scale=0.0, tol=1e-9):
    """Fitted Ramsey fringe amplitude for each rotation-pulse power.

    Parameters
    ----------
    system : LevelSystem
        Needs a nonzero ground splitting for fringes to exist.
    p : CavityDotParams
    pulse_template : SechPulse or InstantaneousPulse
        Bandwidth, detuning and polarization of the rotation pulses; the
        peak Rabi frequency is replaced per power.  For an instantaneous
        pulse the rotation angle itself is ``(π/2) power``.
    power_grid : array_like
        Powers in units of the π/2-pulse power.
    tau_grid : array_like, optional
        Pulse separations for the fringe fit; defaults to five Larmor
        periods after the pulses stop overlapping.
    area_decay : float
        The fitted amplitude is multiplied by ``exp(-area/area_decay)``
        to model damping at high power; ``inf`` disables it.

    Returns
    -------
    RabiScan
    """
    power = np.asarray(power_grid, dtype=float)
    if np.any(power < 0):
        raise InvalidParameterError("powers must be non-negative")
    if system.ground_splitting == 0:
        raise InvalidParameterError("Ramsey fringes need a nonzero ground splitting")
    notes = []
    if isinstance(pulse_template, InstantaneousPulse):
        half = 0.0
        rabi_half = math.nan
    else:
        half = PULSE_TAIL / pulse_template.bandwidth
        calib = AngleCalibration(system, pulse_template, tol)
        rabi_half = calib.rabi_for(math.pi / 2)
    tau = _default_tau(system, half) if tau_grid is None else np.asarray(tau_grid, dtype=float)

    points = []
    for pw in power:
        if isinstance(pulse_template, InstantaneousPulse):
            rabi = math.nan
            area = 0.5 * math.pi * pw
            pulse = InstantaneousPulse(area)
        else:
            rabi = rabi_half * math.sqrt(pw)
            pulse = pulse_template.replace(rabi_peak=rabi)
            area = abs(calib.angle(rabi))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SimulationWarning)
            series = simulate_ramsey(system, p, pulse, tau, nuclear_sigma, n_samples, seed,
                                     T1=T1, coupling_scale=coupling_scale, tol=tol)
        raw = _fringe_amplitude(tau, series.population, system)
        damp = math.exp(-area / area_decay) if math.isfinite(area_decay) else 1.0
        points.append(RabiPoint(float(pw), float(rabi), float(area), raw, raw * damp))
    return RabiScan(points, float(rabi_half), notes)


def _fringe_amplitude(tau, y, system):
    if np.ptp(y) < 1e-9:
        return 0.0
    omega_l = system.ground_splitting / HBAR
    fit = fit_decaying_cosine(tau, y, initial_guess={"frequency": omega_l})
    if fit.decay_at_bound:
        return fit.amplitude
    # amplitude at the first delay of the window
    return fit.amplitude * math.exp(-float(tau[0]) / fit.decay_time)
