"""Spin-subspace reduction, rotation targets and fidelity/purity."""
from __future__ import annotations

import math

import numpy as np

from qdcavity.errors import InvalidParameterError

BRIGHT = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
DARK = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)


def branching(system):
    """Matrix ``b[trion, ground]`` of radiative branching fractions."""
    b = np.zeros((2, 2))
    for tr in system.transitions:
        b[tr.upper_index - 2, tr.lower_index] += tr.decay_rate
    totals = b.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(totals > 0, b / totals, 0.5)
    return b


def spin_state(rho, system):
    """Spin density matrix once any trion population has recombined.

    Trion populations are returned to the ground states incoherently with
    the radiative branching ratios; ground-trion and trion-trion coherences
    do not feed the spin.  Accepts stacks of shape (..., 4, 4).
    """
    rho = np.asarray(rho)
    if rho.shape[-2:] == (2, 2):
        return rho
    if rho.shape[-2:] != (4, 4):
        raise InvalidParameterError("expected a 4x4 or 2x2 density matrix")
    spin = rho[..., :2, :2].copy()
    trion_pops = np.real(np.stack([rho[..., 2, 2], rho[..., 3, 3]], axis=-1))
    feed = trion_pops @ branching(system)
    spin[..., 0, 0] += feed[..., 0]
    spin[..., 1, 1] += feed[..., 1]
    return spin


def readout_population(rho, system, index=0):
    """Population of ground state ``index`` after trion recombination."""
    return np.real(spin_state(rho, system)[..., index, index])


def rotated_spin(angle, initial=0):
    """Ideal ``exp(-i angle σ_z/2)`` rotation of a ground eigenstate.

    σ_z is taken in the bright/dark basis, i.e. about the optical axis.
    """
    psi0 = np.zeros(2, dtype=complex)
    psi0[initial] = 1.0
    b = BRIGHT.conj() @ psi0
    d = DARK.conj() @ psi0
    return np.exp(-0.5j * angle) * b * BRIGHT + np.exp(0.5j * angle) * d * DARK


def rotation_superop(angle):
    """4x4 unitary embedding the ideal spin rotation (trions untouched)."""
    U = np.eye(4, dtype=complex)
    R = (np.exp(-0.5j * angle) * np.outer(BRIGHT, BRIGHT.conj())
         + np.exp(0.5j * angle) * np.outer(DARK, DARK.conj()))
    U[:2, :2] = R
    return U


def fidelity_purity(rho, target, system=None):
    """Fidelity ⟨ψ|ρ|ψ⟩ and purity Tr ρ² of the spin state.

    ``rho`` is either a 2x2 spin density matrix or a 4x4 one, which is
    first reduced with :func:`spin_state` (requires ``system``).
    """
    rho = np.asarray(rho.data if hasattr(rho, "data") else rho)
    if rho.shape == (4, 4):
        if system is None:
            raise InvalidParameterError("system needed to reduce a 4x4 state")
        rho = spin_state(rho, system)
    psi = np.asarray(target, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    fidelity = float(np.real(psi.conj() @ rho @ psi))
    purity = float(np.real(np.trace(rho @ rho)))
    return fidelity, purity
