"""Optical spin pumping under a resonant cw drive."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from qdcavity.core.constants import HBAR
from qdcavity.dynamics.decay import with_cavity_decay
from qdcavity.dynamics.lindblad import DriveComponent, DriveField, Generator, matrix_units
from qdcavity.errors import FitError, InvalidParameterError, SimulationWarning
from qdcavity.lm import levenberg_marquardt

DEFAULT_T1 = 265000.0  # ps
FIT_QUALITY_TOL = 1e-3  # RMS residual relative to the fitted amplitude
_START_LIFETIMES = 5.0
_END_TIMES = 8.0  # fit window length in units of the slowest relaxation time


@dataclass
class PumpingResult:
    rate: float  # fitted, ps⁻¹
    spectral_rate: float  # slowest nonzero decay rate of the populated modes, ps⁻¹
    times: np.ndarray
    population: np.ndarray  # driven ground + trion
    fit_rms: float
    warnings: list = field(default_factory=list)


def _constant(value):
    def amp(t, _v=complex(value)):
        return _v
    return amp


def pumping_liouvillian(system, driven_transition, rabi, T1):
    """Generator (16x16) for a cw drive resonant with one transition.

    The drive couples only the chosen transition, at Rabi frequency ``rabi``
    (population oscillation frequency of the isolated two-level pair).
    """
    tr = system.transitions[driven_transition]
    drive = DriveField((DriveComponent(_constant(rabi / 2.0), transition_index=driven_transition),),
                       rotating_frame=tr.energy)
    gen = Generator(system, drive, T1)
    images = gen(0.0, matrix_units())
    return np.swapaxes(images.reshape(16, 16), 0, 1)


def simulate_pumping(system, p, driven_transition, rabi, T1_spin=DEFAULT_T1, *,
                     cavity_decay=True, n_samples=200):
    """Pumping rate out of the driven ground state under cw excitation.

    Parameters
    ----------
    system : LevelSystem
    p : CavityDotParams
        Supplies the cavity enhancement of the branch rates.
    driven_transition : int
        Index into ``system.transitions``.
    rabi : float
        Rabi frequency of the cw drive (ps⁻¹), ≥ 0.
    T1_spin : float
        Ground-state spin relaxation time (ps); ``inf`` disables it.
    cavity_decay : bool
        Replace the branch rates by their cavity-enhanced values first.

    Returns
    -------
    PumpingResult
        ``rate`` is the exponential rate fitted to the population of the
        driven ground state plus its trion, starting five trion lifetimes
        after switch-on.
    """
    if rabi < 0 or not math.isfinite(rabi):
        raise InvalidParameterError("rabi must be finite and non-negative")
    if not 0 <= driven_transition < len(system.transitions):
        raise InvalidParameterError(f"no transition {driven_transition}")
    sysd = with_cavity_decay(system, p) if cavity_decay else system
    T1 = None if T1_spin is None or not math.isfinite(T1_spin) else float(T1_spin)
    tr = sysd.transitions[driven_transition]
    L = pumping_liouvillian(sysd, driven_transition, rabi, T1)

    # populations and the driven coherence form an invariant subspace; the
    # other coherences start at zero and never couple in
    reach = [0, 5, 10, 15, 4 * tr.lower_index + tr.upper_index, 4 * tr.upper_index + tr.lower_index]
    eig = np.linalg.eigvals(L[np.ix_(reach, reach)])
    rates = -eig.real
    scale = np.abs(eig).max()
    slow = rates[rates > 1e-10 * max(scale, 1e-300)]
    if slow.size == 0:
        raise InvalidParameterError("no relaxation at all: the driven population never decays")
    spectral = float(slow.min())

    trion_rate = 2.0 * sysd.total_decay(tr.upper_index) / HBAR
    t_start = _START_LIFETIMES / trion_rate if trion_rate > 0 else 0.0
    t_end = t_start + _END_TIMES / spectral
    times = np.linspace(t_start, t_end, n_samples)
    rho0 = np.zeros(16, dtype=complex)
    rho0[5 * tr.lower_index] = 1.0
    v = expm(L * t_start) @ rho0
    step = expm(L * (times[1] - times[0]))
    pops = np.empty(n_samples)
    idx_g, idx_t = 5 * tr.lower_index, 5 * tr.upper_index
    for i in range(n_samples):
        pops[i] = np.real(v[idx_g] + v[idx_t])
        v = step @ v

    notes = []
    rate, rms = _fit_exponential(times, pops, spectral)
    amplitude = abs(pops[0] - pops[-1])
    if amplitude > 0 and rms > FIT_QUALITY_TOL * amplitude:
        msg = (f"transient not single-exponential after {t_start:.3g} ps: RMS residual "
               f"{rms:.3g} vs amplitude {amplitude:.3g}")
        warnings.warn(msg, SimulationWarning, stacklevel=2)
        notes.append(msg)
    return PumpingResult(rate, spectral, times, pops, rms, notes)


def _fit_exponential(t, y, rate_guess):
    """Fit ``a exp(-k (t - t0)) + c``; returns (k, RMS residual)."""
    t0 = t[0]
    c0 = y[-1]
    a0 = y[0] - c0
    span = t[-1] - t0
    x0 = np.array([a0, rate_guess, c0])
    big = 10.0 * max(abs(a0), abs(c0), 1e-12)

    def residual(x):
        return x[0] * np.exp(-x[1] * (t - t0)) + x[2] - y

    lower = np.array([-big, 0.0, -big])
    upper = np.array([big, 1e3 / span, big])
    steps = np.array([1e-8 * big, 1e-7 * rate_guess, 1e-8 * big])
    res = levenberg_marquardt(residual, x0, lower, upper, steps=steps, max_iterations=200,
                              step_tol=1e-13, residual_tol=1e-15)
    if not res.converged:
        raise FitError("exponential pumping fit did not converge", last_iterate=res.x)
    return float(res.x[1]), float(np.sqrt(np.mean(res.residual ** 2)))
