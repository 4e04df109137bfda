"""Lindblad / optical Bloch equations for the four-level Λ system.

Dynamics are written in the frame rotating at ``DriveField.rotating_frame``
(default: the mean optical transition) under the rotating-wave
approximation.  A transition k between ``lower`` and ``upper`` is driven by

    H_k(t) = ħ Ω_k(t) |upper><lower| + h.c.

where Ω_k(t) sums the polarization projections of all drive components.
Radiative branches decay with population rate ``2 Γ_k / ħ`` (Γ_k is a
half-width in μeV); spin relaxation flips the ground states at ``1/(2 T1)``
each way so the population difference relaxes with time constant T1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from qdcavity.core.constants import HBAR
from qdcavity.core.levels import N_LEVELS, polarization_vector
from qdcavity.core.state import DensityMatrix, state_violations
from qdcavity.dynamics.integrator import dopri5
from qdcavity.errors import InvalidParameterError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class DriveComponent:
    """One field component: a complex Rabi amplitude (ps⁻¹) versus time.

    Either ``polarization`` (Jones vector or name, projected onto every
    transition dipole) or ``transition_index`` (couples one transition with
    unit weight) must be given.
    """

    amplitude: Callable[[float], complex]
    polarization: Optional[object] = None
    transition_index: Optional[int] = None

    def __post_init__(self):
        if (self.polarization is None) == (self.transition_index is None):
            raise InvalidParameterError("give exactly one of polarization or transition_index")


@dataclass(frozen=True)
class DriveField:
    components: tuple = ()
    rotating_frame: Optional[float] = None  # μeV; None → system transition energy

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __add__(self, other):
        if self.rotating_frame != other.rotating_frame:
            raise InvalidParameterError("cannot add drives in different rotating frames")
        return DriveField(self.components + other.components, self.rotating_frame)

    def rabi(self, system, t):
        """Per-transition complex Rabi amplitudes Ω_k(t)."""
        out = np.zeros(len(system.transitions), dtype=complex)
        for comp in self.components:
            a = comp.amplitude(t)
            if comp.transition_index is not None:
                out[comp.transition_index] += a
            else:
                for k, tr in enumerate(system.transitions):
                    out[k] += tr.coupling(comp.polarization) * a
        return out


NO_DRIVE = DriveField()


def decay_channels(system, T1=None):
    """Lindblad channels ``(lower, upper, rate)`` with rates in ps⁻¹."""
    channels = [(tr.lower_index, tr.upper_index, 2.0 * tr.decay_rate / HBAR) for tr in system.transitions]
    if T1 is not None and np.isfinite(T1):
        if T1 <= 0:
            raise InvalidParameterError("T1 must be positive")
        channels += [(1, 0, 0.5 / T1), (0, 1, 0.5 / T1)]
    return [c for c in channels if c[2] > 0]


def lindblad_rhs(rho, H, decays, hbar=HBAR):
    """Time derivative of ``rho`` under the Lindblad master equation.

    Parameters
    ----------
    rho : ndarray, shape (..., n, n)
    H : ndarray, shape (..., n, n)
        Hamiltonian in μeV (or in units matching ``hbar``).
    decays : sequence of (lower, upper, rate)
        Jump operators ``|lower><upper|`` with rate in ps⁻¹.
    """
    rho = np.asarray(rho)
    H = np.asarray(H)
    n = rho.shape[-1]
    if rho.shape[-2] != n or H.shape[-2:] != (n, n):
        raise InvalidParameterError(f"dimension mismatch: rho {rho.shape}, H {H.shape}")
    drho = (-1j / hbar) * (H @ rho - rho @ H)
    for lower, upper, rate in decays:
        if not (0 <= lower < n and 0 <= upper < n):
            raise InvalidParameterError(f"decay ({lower}, {upper}) outside dimension {n}")
        if rate < 0:
            raise InvalidParameterError("decay rates must be non-negative")
        drho[..., lower, lower] += rate * rho[..., upper, upper]
        drho[..., upper, :] -= 0.5 * rate * rho[..., upper, :]
        drho[..., :, upper] -= 0.5 * rate * rho[..., :, upper]
    return drho


class Generator:
    """Precomputed Lindblad generator for a level system and drive.

    ``energy_shifts`` (optional, shape (batch, 4)) adds per-batch diagonal
    energies, used to propagate several Overhauser configurations at once.
    """

    def __init__(self, system, drive=NO_DRIVE, T1=None, energy_shifts=None):
        frame = drive.rotating_frame
        energies = system.level_energies(frame)
        H0 = np.diag(energies).astype(complex)
        if energy_shifts is not None:
            shifts = np.asarray(energy_shifts, dtype=float)
            H0 = H0 + shifts[:, None, :] * np.eye(N_LEVELS)
            H0 = H0[:, None]  # broadcast over the stacked state axis
        self.H0 = H0
        self.system = system
        self.drive = drive
        self.decays = decay_channels(system, T1)
        self._ops = []
        for comp in drive.components:
            M = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
            if comp.transition_index is not None:
                tr = system.transitions[comp.transition_index]
                M[tr.upper_index, tr.lower_index] = HBAR
            else:
                pol = polarization_vector(comp.polarization)
                for tr in system.transitions:
                    M[tr.upper_index, tr.lower_index] += HBAR * tr.coupling(pol)
            self._ops.append((comp.amplitude, M))
        # non-Hermitian effective Hamiltonian carries the anticommutator term
        K = np.zeros((N_LEVELS, N_LEVELS))
        for lower, upper, rate in self.decays:
            K[upper, upper] += rate
        self._Kh = 0.5j * HBAR * K
        self._jumps = [(lower, upper, rate) for lower, upper, rate in self.decays]

    def hamiltonian(self, t):
        H = self.H0
        for amp, M in self._ops:
            a = amp(t)
            if a != 0:
                V = a * M
                H = H + V + V.conj().T
        return H

    def __call__(self, t, rho):
        H_eff = self.hamiltonian(t) - self._Kh
        drho = (-1j / HBAR) * (H_eff @ rho - rho @ np.conj(np.swapaxes(H_eff, -1, -2)))
        for lower, upper, rate in self._jumps:
            drho[..., lower, lower] += rate * rho[..., upper, upper]
        return drho


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n_times, 4, 4)
    observables: dict = field(default_factory=dict)
    n_steps: int = 0

    def density_matrices(self):
        return [DensityMatrix(s) for s in self.states]

    @property
    def final(self):
        return self.states[-1]

    def violations(self):
        """Worst (trace drift, hermiticity deviation, min eigenvalue)."""
        return state_violations(self.states)


def observables_of(states):
    states = np.asarray(states)
    pops = np.real(np.diagonal(states, axis1=-2, axis2=-1))
    return {
        "pop_g0": pops[..., 0],
        "pop_g1": pops[..., 1],
        "pop_t2": pops[..., 2],
        "pop_t3": pops[..., 3],
        "re_g0g1": np.real(states[..., 0, 1]),
        "im_g0g1": np.imag(states[..., 0, 1]),
    }


def evolve(rho0, system, drive=NO_DRIVE, span=(0.0, 1.0), tol=DEFAULT_TOL, t_eval=None,
           T1=None, max_step=np.inf):
    """Integrate the master equation from ``rho0`` over ``span``.

    Parameters
    ----------
    rho0 : DensityMatrix or ndarray
    system : LevelSystem
    drive : DriveField
    span : (t0, t1) in ps
    tol : float
        Local error tolerance, in (1e-12, 1e-4).
    t_eval : array_like, optional
        Sample times; defaults to the span end points.
    T1 : float, optional
        Spin relaxation time (ps); ``None`` disables spin relaxation.
    max_step : float
        Upper bound on the step, useful when the drive has features that
        a large step could skip.

    Returns
    -------
    Trajectory
    """
    if not 1e-12 < tol < 1e-4:
        raise InvalidParameterError("tol must lie in (1e-12, 1e-4)")
    rho = np.asarray(rho0.data if isinstance(rho0, DensityMatrix) else rho0, dtype=complex)
    if rho.shape != (N_LEVELS, N_LEVELS):
        raise InvalidParameterError(f"rho0 must be {N_LEVELS}x{N_LEVELS}")
    gen = Generator(system, drive, T1)
    sol = dopri5(gen, span, rho, t_eval=t_eval, rtol=tol, atol=tol, max_step=max_step)
    return Trajectory(sol.t, sol.y, observables_of(sol.y), sol.n_steps)


def matrix_units(n=N_LEVELS):
    """Stack of the n² matrix units E_ij, index i*n + j."""
    E = np.zeros((n * n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            E[i * n + j, i, j] = 1.0
    return E


def propagator(system, drive=NO_DRIVE, span=(0.0, 1.0), tol=DEFAULT_TOL, T1=None,
               energy_shifts=None, max_step=np.inf):
    """Superoperator of the master equation over ``span``.

    Returns an array of shape (16, 16) (or (batch, 16, 16) with
    ``energy_shifts``) acting on row-major vectorized density matrices:
    ``vec(rho(t1)) = P @ vec(rho(t0))``.
    """
    E = matrix_units()
    y0 = E if energy_shifts is None else np.broadcast_to(E, (len(energy_shifts),) + E.shape).copy()
    gen = Generator(system, drive, T1, energy_shifts)
    sol = dopri5(gen, span, y0, rtol=tol, atol=tol, max_step=max_step)
    out = sol.y[-1]
    n2 = N_LEVELS * N_LEVELS
    # out[..., col, i, j] is the image of matrix unit `col`; transpose to columns
    return np.swapaxes(out.reshape(out.shape[:-2] + (n2,)), -1, -2)


def apply_superop(P, rho):
    rho = np.asarray(rho)
    v = rho.reshape(rho.shape[:-2] + (-1,))
    return (P @ v[..., None])[..., 0].reshape(rho.shape)
